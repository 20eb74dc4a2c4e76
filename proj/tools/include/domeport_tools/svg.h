#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace domeport::tools {

// Minimal SVG canvas in image pixel coordinates (y down), scaled to a fixed
// output width. Coordinates are printed with 2 decimals so files diff well.
class SvgCanvas {
 public:
  SvgCanvas(double width_px, double height_px, double output_width = 800.0);

  void Rect(double x, double y, double w, double h, const std::string& stroke,
            const std::string& fill);
  void Line(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
            const std::string& stroke, double stroke_width = 1.0);
  void Arrow(const Eigen::Vector2d& from, const Eigen::Vector2d& to,
             const std::string& stroke);
  void Circle(const Eigen::Vector2d& center, double radius,
              const std::string& fill);
  void Polyline(const std::vector<Eigen::Vector2d>& points,
                const std::string& stroke, bool closed = false);
  void Text(const Eigen::Vector2d& at, const std::string& text,
            double size = 12.0);

  std::string str() const;

 private:
  std::string X(double x) const;
  std::string Y(double y) const;

  double width_;
  double height_;
  double scale_;
  std::vector<std::string> elements_;
};

// XY line chart with one polyline per series, used for sweep curves.
struct Series {
  std::string label;
  std::string color;
  std::vector<Eigen::Vector2d> points;
};

std::string LineChart(const std::string& title, const std::string& x_label,
                      const std::string& y_label,
                      const std::vector<Series>& series);

}  // namespace domeport::tools

#include "domeport_tools/svg.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace domeport::tools {
namespace {

std::string Fixed(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  std::string text = buffer;
  return text == "-0.00" ? "0.00" : text;
}

std::string Escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

SvgCanvas::SvgCanvas(double width_px, double height_px, double output_width)
    : width_(width_px), height_(height_px), scale_(output_width / width_px) {}

std::string SvgCanvas::X(double x) const { return Fixed(x * scale_); }
std::string SvgCanvas::Y(double y) const { return Fixed(y * scale_); }

void SvgCanvas::Rect(double x, double y, double w, double h,
                     const std::string& stroke, const std::string& fill) {
  elements_.push_back("<rect x=\"" + X(x) + "\" y=\"" + Y(y) + "\" width=\"" +
                      X(w) + "\" height=\"" + Y(h) + "\" stroke=\"" + stroke +
                      "\" fill=\"" + fill + "\"/>");
}

void SvgCanvas::Line(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const std::string& stroke, double stroke_width) {
  elements_.push_back("<line x1=\"" + X(a.x()) + "\" y1=\"" + Y(a.y()) +
                      "\" x2=\"" + X(b.x()) + "\" y2=\"" + Y(b.y()) +
                      "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                      Fixed(stroke_width) + "\"/>");
}

void SvgCanvas::Arrow(const Eigen::Vector2d& from, const Eigen::Vector2d& to,
                      const std::string& stroke) {
  Line(from, to, stroke);
  const Eigen::Vector2d d = to - from;
  const double length = d.norm();
  if (!(length > 0.0)) return;
  const Eigen::Vector2d u = d / length;
  const Eigen::Vector2d n(-u.y(), u.x());
  const double head = std::min(0.35 * length, 6.0 / scale_);
  Line(to, to - head * u + 0.5 * head * n, stroke);
  Line(to, to - head * u - 0.5 * head * n, stroke);
}

void SvgCanvas::Circle(const Eigen::Vector2d& center, double radius,
                       const std::string& fill) {
  elements_.push_back("<circle cx=\"" + X(center.x()) + "\" cy=\"" +
                      Y(center.y()) + "\" r=\"" + Fixed(radius) +
                      "\" fill=\"" + fill + "\"/>");
}

void SvgCanvas::Polyline(const std::vector<Eigen::Vector2d>& points,
                         const std::string& stroke, bool closed) {
  if (points.empty()) return;
  std::string coordinates;
  for (const Eigen::Vector2d& p : points) {
    if (!coordinates.empty()) coordinates += ' ';
    coordinates += X(p.x()) + "," + Y(p.y());
  }
  elements_.push_back(std::string(closed ? "<polygon" : "<polyline") +
                      " points=\"" + coordinates + "\" stroke=\"" + stroke +
                      "\" fill=\"none\"/>");
}

void SvgCanvas::Text(const Eigen::Vector2d& at, const std::string& text,
                     double size) {
  elements_.push_back("<text x=\"" + X(at.x()) + "\" y=\"" + Y(at.y()) +
                      "\" font-family=\"monospace\" font-size=\"" +
                      Fixed(size) + "\">" + Escape(text) + "</text>");
}

std::string SvgCanvas::str() const {
  std::string out =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + X(width_) +
      "\" height=\"" + Y(height_) + "\" viewBox=\"0 0 " + X(width_) + " " +
      Y(height_) + "\">\n";
  for (const std::string& element : elements_) out += "  " + element + "\n";
  out += "</svg>\n";
  return out;
}

std::string LineChart(const std::string& title, const std::string& x_label,
                      const std::string& y_label,
                      const std::vector<Series>& series) {
  constexpr double kWidth = 640.0;
  constexpr double kHeight = 400.0;
  constexpr double kLeft = 70.0;
  constexpr double kRight = 20.0;
  constexpr double kTop = 40.0;
  constexpr double kBottom = 50.0;
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = 0.0;
  double y_max = -x_min;
  for (const Series& s : series) {
    for (const Eigen::Vector2d& p : s.points) {
      if (!std::isfinite(p.x()) || !std::isfinite(p.y())) continue;
      x_min = std::min(x_min, p.x());
      x_max = std::max(x_max, p.x());
      y_min = std::min(y_min, p.y());
      y_max = std::max(y_max, p.y());
    }
  }
  if (!std::isfinite(x_min)) {
    x_min = 0.0;
    x_max = 1.0;
  }
  if (!(y_max > y_min)) y_max = y_min + 1.0;
  if (!(x_max > x_min)) x_max = x_min + 1.0;
  auto to_canvas = [&](const Eigen::Vector2d& p) {
    return Eigen::Vector2d(
        kLeft + (p.x() - x_min) / (x_max - x_min) * (kWidth - kLeft - kRight),
        kHeight - kBottom -
            (p.y() - y_min) / (y_max - y_min) * (kHeight - kTop - kBottom));
  };

  SvgCanvas canvas(kWidth, kHeight, kWidth);
  canvas.Rect(kLeft, kTop, kWidth - kLeft - kRight, kHeight - kTop - kBottom,
              "black", "none");
  canvas.Text({kLeft, 24.0}, title, 14.0);
  canvas.Text({kWidth / 2.0 - 40.0, kHeight - 12.0}, x_label);
  canvas.Text({4.0, kTop - 8.0}, y_label);
  for (int tick = 0; tick <= 4; ++tick) {
    const double fx = x_min + (x_max - x_min) * tick / 4.0;
    const double fy = y_min + (y_max - y_min) * tick / 4.0;
    const Eigen::Vector2d px = to_canvas({fx, y_min});
    const Eigen::Vector2d py = to_canvas({x_min, fy});
    canvas.Text({px.x() - 12.0, kHeight - kBottom + 16.0}, Fixed(fx), 10.0);
    canvas.Text({6.0, py.y() + 4.0}, Fixed(fy), 10.0);
  }
  double legend_y = kTop + 16.0;
  for (const Series& s : series) {
    std::vector<Eigen::Vector2d> points;
    for (const Eigen::Vector2d& p : s.points) {
      if (std::isfinite(p.x()) && std::isfinite(p.y())) {
        points.push_back(to_canvas(p));
      }
    }
    canvas.Polyline(points, s.color);
    for (const Eigen::Vector2d& p : points) canvas.Circle(p, 2.5, s.color);
    canvas.Line({kWidth - 180.0, legend_y - 4.0}, {kWidth - 160.0, legend_y - 4.0},
                s.color, 2.0);
    canvas.Text({kWidth - 154.0, legend_y}, s.label, 11.0);
    legend_y += 16.0;
  }
  return canvas.str();
}

}  // namespace domeport::tools

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace domeport {

// Planar chessboard with rows x cols inner corners. Corner (i, j) sits at
// (i * square_size, j * square_size, 0) in the board frame, i along the
// columns and j along the rows.
struct ChessboardSpec {
  int rows = 7;
  int cols = 8;
  double square_size = 0.05;

  int corner_count() const { return rows * cols; }
  int Index(int i, int j) const { return j * cols + i; }
  Eigen::Vector3d Corner(int i, int j) const {
    return {i * square_size, j * square_size, 0.0};
  }
  Eigen::Vector3d Corner(int index) const {
    return Corner(index % cols, index / cols);
  }
  std::vector<Eigen::Vector3d> Corners() const;
  Eigen::Vector3d Center() const {
    return {0.5 * (cols - 1) * square_size, 0.5 * (rows - 1) * square_size,
            0.0};
  }

  void Validate() const;
};

// Detected corners of one image, ordered like ChessboardSpec::Index.
struct ImageObservation {
  std::string id;
  std::vector<Eigen::Vector2d> corners_px;
};

struct ObservationSet {
  ChessboardSpec board;
  std::vector<ImageObservation> images;

  // Checks complete grids with finite coordinates. When width/height are
  // positive, corners must also lie inside the image.
  void Validate(int width = 0, int height = 0) const;
};

}  // namespace domeport

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "domeport/observations.h"
#include "domeport/types.h"

namespace domeport {

struct DirectSolverOptions {
  // Used by the degeneracy threshold. Defaults to the 2048x1536 sensor.
  double image_diagonal_px = 2560.0;
  // Corner noise; negative means estimate it from the residual distances to
  // the fitted lines.
  double noise_px = -1.0;
  double degeneracy_factor = 10.0;
};

struct CenterEstimate {
  // x_r^T F x_c = 0 in pixel / board-plane coordinates, unit Frobenius norm.
  Eigen::Matrix3d F = Eigen::Matrix3d::Zero();
  // Left null vector of F, unit norm, third coordinate >= 0.
  Eigen::Vector3d refraction_center_px = Eigen::Vector3d::UnitZ();
  // Second-smallest over largest singular value of the design matrix.
  double second_singular_ratio = 0.0;
  // Second-smallest over smallest singular value of the design matrix.
  double null_space_gap = 0.0;
  double homography_error_px = 0.0;
  double noise_px = 0.0;
  double degeneracy_threshold = 0.0;
  bool degenerate = false;
};

// Linear estimate of F = [r]x H from one chessboard image (normalized
// 8-point style). A degenerate result is flagged, not thrown.
CenterEstimate EstimateCenter(const ImageObservation& image,
                              const ChessboardSpec& board,
                              const DirectSolverOptions& options = {});

// Largest |x_r^T F x_c| over the corners in Hartley-normalized coordinates.
double EpipolarResidual(const CenterEstimate& estimate,
                        const ImageObservation& image,
                        const ChessboardSpec& board);

struct CombinedCenter {
  Eigen::Vector3d refraction_center_px = Eigen::Vector3d::UnitZ();
  // Weighted RMS distance of corners to their displacement lines.
  double rms_line_distance_px = 0.0;
  int images_used = 0;
  int iterations = 0;
};

// Joint refinement of a single refraction centre over several images: each
// image keeps its own homography, all share r. Weights default to each
// image's homography mapping error. Flagged images still contribute their
// constraints. Throws kAllDegenerate when every estimate is flagged.
CombinedCenter CombineCenters(const std::vector<CenterEstimate>& estimates,
                              const std::vector<ImageObservation>& images,
                              const ChessboardSpec& board,
                              std::vector<double> weights = {});

enum class DecenteringSign { kBackward, kForward, kUndetermined };

std::string DecenteringSignName(DecenteringSign sign);

struct SignResult {
  DecenteringSign sign = DecenteringSign::kUndetermined;
  double vote_fraction = 0.0;
  int positive_votes = 0;
  int negative_votes = 0;
  int excluded = 0;
  // The centre rescaled so that it is proportional to K R (0 - v_off). Equals
  // the input up to sign; unset orientation when undetermined.
  Eigen::Vector3d oriented_center = Eigen::Vector3d::UnitZ();
};

// Convexity test of one collinear board triple: sign of
// ((x1 x x3) . x2) ((x1 x x3) . r). Zero when x2 lies on the chord.
double ConvexityProduct(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2,
                        const Eigen::Vector2d& x3, const Eigen::Vector3d& r);

// Majority vote of the convexity product over every ordered corner triple on
// each board row and column.
SignResult ConvexitySign(const ImageObservation& image,
                         const ChessboardSpec& board,
                         const Eigen::Vector3d& refraction_center);

// Unit world direction R^T K^-1 r.
Eigen::Vector3d AxisFromCenter(const Eigen::Vector3d& refraction_center,
                               const CameraIntrinsics& intrinsics,
                               const Eigen::Matrix3d& rotation);

// Unit direction of v_off implied by an oriented centre.
Eigen::Vector3d DecenteringDirection(const Eigen::Vector3d& oriented_center,
                                     const CameraIntrinsics& intrinsics,
                                     const Eigen::Matrix3d& rotation);

}  // namespace domeport

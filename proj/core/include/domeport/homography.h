#pragma once

#include <vector>

#include <Eigen/Core>

#include "domeport/observations.h"
#include "domeport/types.h"

namespace domeport {

// Similarity moving the centroid to the origin with RMS distance sqrt(2).
Eigen::Matrix3d HartleyNormalization(const std::vector<Eigen::Vector2d>& points);

// Board-plane points (X, Y) of every corner, in board index order.
std::vector<Eigen::Vector2d> BoardPlanePoints(const ChessboardSpec& board);

struct HomographyEstimate {
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
  // sqrt(sum |x - H(X)|^2 / (2 n)), pixels.
  double rms_px = 0.0;
};

// Normalized DLT followed by Levenberg-Marquardt on the image residual.
// Needs >= 4 correspondences.
HomographyEstimate EstimateHomography(const std::vector<Eigen::Vector2d>& src,
                                      const std::vector<Eigen::Vector2d>& dst,
                                      bool refine = true);

Eigen::Vector2d ApplyHomography(const Eigen::Matrix3d& H,
                                const Eigen::Vector2d& point);

// RMS residual of the best board-to-image homography. Small values mean the
// refraction displacement is indistinguishable from a perspectivity.
double HomographyMappingError(const ImageObservation& image,
                              const ChessboardSpec& board);

// Board-to-camera pose from H ~ K [r1 r2 t], placing the board in front of
// the camera. Throws kPlanarDegeneracy for rank-deficient H.
Pose PoseFromHomography(const Eigen::Matrix3d& H,
                        const CameraIntrinsics& intrinsics);

}  // namespace domeport

#include "domeport/types.h"

#include <cmath>
#include <sstream>

#include <Eigen/Geometry>

#include "domeport/error.h"
#include "domeport/observations.h"
#include "domeport/tolerances.h"

namespace domeport {

void MediaStack::Validate() const {
  if (!(mu_air >= 1.0 && mu_glass >= 1.0 && mu_water >= 1.0)) {
    Throw(ErrorCode::kInvalidArgument, "refractive indices must be >= 1");
  }
  if (!(mu_air <= mu_water && mu_water <= mu_glass)) {
    Throw(ErrorCode::kInvalidArgument,
          "expected mu_air <= mu_water <= mu_glass");
  }
}

std::string DomeModelName(DomeModel model) {
  return model == DomeModel::kThin ? "thin" : "thick";
}

DomeModel ParseDomeModel(const std::string& name) {
  if (name == "thin") return DomeModel::kThin;
  if (name == "thick") return DomeModel::kThick;
  Throw(ErrorCode::kInvalidArgument, "unknown dome model '" + name + "'");
}

void DomeGeometry::Validate() const {
  if (!(inner_radius > 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "dome inner_radius must be positive");
  }
  if (!(thickness >= 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "dome thickness must be >= 0");
  }
}

Eigen::Matrix3d CameraIntrinsics::K() const {
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = focal_length_x;
  k(1, 1) = focal_length_y;
  k(0, 2) = principal_point.x();
  k(1, 2) = principal_point.y();
  return k;
}

Eigen::Matrix3d CameraIntrinsics::KInverse() const {
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = 1.0 / focal_length_x;
  k(1, 1) = 1.0 / focal_length_y;
  k(0, 2) = -principal_point.x() / focal_length_x;
  k(1, 2) = -principal_point.y() / focal_length_y;
  return k;
}

Eigen::Vector3d CameraIntrinsics::PixelToRay(const Eigen::Vector2d& pixel) const {
  return {(pixel.x() - principal_point.x()) / focal_length_x,
          (pixel.y() - principal_point.y()) / focal_length_y, 1.0};
}

Eigen::Vector2d CameraIntrinsics::CameraToPixel(
    const Eigen::Vector3d& point_camera) const {
  return {focal_length_x * point_camera.x() / point_camera.z() +
              principal_point.x(),
          focal_length_y * point_camera.y() / point_camera.z() +
              principal_point.y()};
}

bool CameraIntrinsics::Contains(const Eigen::Vector2d& pixel,
                                double margin) const {
  return pixel.x() >= margin && pixel.y() >= margin &&
         pixel.x() <= width - margin && pixel.y() <= height - margin;
}

double CameraIntrinsics::Diagonal() const {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

std::vector<std::string> CameraIntrinsics::Validate() const {
  if (!(focal_length_x > 0.0 && focal_length_y > 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    Throw(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  std::vector<std::string> warnings;
  if (!Contains(principal_point)) {
    std::ostringstream msg;
    msg << "principal point (" << principal_point.x() << ", "
        << principal_point.y() << ") lies outside the " << width << "x"
        << height << " image";
    warnings.push_back(msg.str());
  }
  return warnings;
}

Pose Pose::Inverse() const {
  Pose inverse;
  inverse.rotation = rotation.transpose();
  inverse.translation = -(inverse.rotation * translation);
  return inverse;
}

Pose Pose::operator*(const Pose& other) const {
  Pose composed;
  composed.rotation = rotation * other.rotation;
  composed.translation = rotation * other.translation + translation;
  return composed;
}

Eigen::Matrix<double, 3, 4> CameraRig::ProjectionMatrix() const {
  Eigen::Matrix<double, 3, 4> projection;
  projection.leftCols<3>() = rotation;
  projection.col(3) = -rotation * v_off;
  return projection;
}

bool CameraRig::IsCentered() const {
  return v_off.norm() < kTolerances.centered_camera_m;
}

std::vector<std::string> CameraRig::Validate() const {
  media.Validate();
  dome.Validate();
  std::vector<std::string> warnings = intrinsics.Validate();
  const double orthonormal_error =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
          .cwiseAbs()
          .maxCoeff();
  if (orthonormal_error > kTolerances.rotation_orthonormal ||
      std::abs(rotation.determinant() - 1.0) >
          kTolerances.rotation_orthonormal) {
    Throw(ErrorCode::kInvalidArgument,
          "rotation must be orthonormal with determinant +1");
  }
  if (!(v_off.norm() < dome.inner_radius)) {
    Throw(ErrorCode::kInvalidArgument,
          "camera centre must lie strictly inside the dome (|v_off| < "
          "inner_radius)");
  }
  return warnings;
}

bool RefractionAxis::IsIdeal(double relative_tolerance) const {
  return std::abs(refraction_center_px.z()) <=
         relative_tolerance * refraction_center_px.norm();
}

std::optional<Eigen::Vector2d> RefractionAxis::EuclideanCenter() const {
  if (IsIdeal()) return std::nullopt;
  return refraction_center_px.hnormalized();
}

Eigen::Matrix3d AngleAxisToRotation(const Eigen::Vector3d& angle_axis) {
  const double angle = angle_axis.norm();
  if (angle < 1e-15) {
    Eigen::Matrix3d skew;
    skew << 0, -angle_axis.z(), angle_axis.y(), angle_axis.z(), 0,
        -angle_axis.x(), -angle_axis.y(), angle_axis.x(), 0;
    return Eigen::Matrix3d::Identity() + skew;
  }
  return Eigen::AngleAxisd(angle, angle_axis / angle).toRotationMatrix();
}

Eigen::Vector3d RotationToAngleAxis(const Eigen::Matrix3d& rotation) {
  const Eigen::AngleAxisd angle_axis(rotation);
  return angle_axis.angle() * angle_axis.axis();
}

double RotationAngle(const Eigen::Matrix3d& rotation) {
  // atan2 form stays accurate near 0 and pi.
  const Eigen::Vector3d skew(rotation(2, 1) - rotation(1, 2),
                             rotation(0, 2) - rotation(2, 0),
                             rotation(1, 0) - rotation(0, 1));
  return std::atan2(0.5 * skew.norm(), 0.5 * (rotation.trace() - 1.0));
}

std::vector<Eigen::Vector3d> ChessboardSpec::Corners() const {
  std::vector<Eigen::Vector3d> corners;
  corners.reserve(corner_count());
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) corners.push_back(Corner(i, j));
  }
  return corners;
}

void ChessboardSpec::Validate() const {
  if (rows < 3 || cols < 3) {
    Throw(ErrorCode::kInvalidArgument, "chessboard needs at least 3x3 corners");
  }
  if (!(square_size > 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "square_size must be positive");
  }
}

void ObservationSet::Validate(int width, int height) const {
  board.Validate();
  for (const ImageObservation& image : images) {
    if (static_cast<int>(image.corners_px.size()) != board.corner_count()) {
      Throw(ErrorCode::kInvalidArgument,
            "image '" + image.id + "' has " +
                std::to_string(image.corners_px.size()) + " corners, expected " +
                std::to_string(board.corner_count()));
    }
    for (const Eigen::Vector2d& corner : image.corners_px) {
      if (!corner.allFinite()) {
        Throw(ErrorCode::kInvalidArgument,
              "image '" + image.id + "' has a non-finite corner");
      }
      if (width > 0 && height > 0 &&
          (corner.x() < 0 || corner.y() < 0 || corner.x() > width ||
           corner.y() > height)) {
        Throw(ErrorCode::kInvalidArgument,
              "image '" + image.id + "' has a corner outside the image");
      }
    }
  }
}

}  // namespace domeport

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace domeport {

// Refractive indices along the light path, from the camera outwards.
struct MediaStack {
  double mu_air = 1.0;
  double mu_glass = 1.473;
  double mu_water = 1.333;

  // Throws kInvalidArgument unless all indices are >= 1 and
  // mu_air <= mu_water <= mu_glass.
  void Validate() const;
};

enum class DomeModel { kThin, kThick };

std::string DomeModelName(DomeModel model);
DomeModel ParseDomeModel(const std::string& name);

// Concentric spherical window centred at the world origin.
struct DomeGeometry {
  double inner_radius = 0.05;
  double thickness = 0.007;
  DomeModel model = DomeModel::kThick;

  // Thin domes have a single interface at inner_radius.
  double outer_radius() const {
    return model == DomeModel::kThin ? inner_radius : inner_radius + thickness;
  }
  double effective_thickness() const {
    return model == DomeModel::kThin ? 0.0 : thickness;
  }

  void Validate() const;
};

struct CameraIntrinsics {
  double focal_length_x = 1024.0;
  double focal_length_y = 1024.0;
  Eigen::Vector2d principal_point{1024.0, 768.0};
  int width = 2048;
  int height = 1536;

  Eigen::Matrix3d K() const;
  Eigen::Matrix3d KInverse() const;

  // Pixel -> point on the normalized image plane (z = 1).
  Eigen::Vector3d PixelToRay(const Eigen::Vector2d& pixel) const;
  Eigen::Vector2d CameraToPixel(const Eigen::Vector3d& point_camera) const;

  bool Contains(const Eigen::Vector2d& pixel, double margin = 0.0) const;
  double Diagonal() const;

  // Throws on non-positive focal lengths or image size. Returns warnings for
  // conditions that are suspicious but usable (principal point off-image).
  std::vector<std::string> Validate() const;
};

// Rigid transform taking board (or any local frame) coordinates into the
// camera frame: X_cam = rotation * X_local + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d Apply(const Eigen::Vector3d& point) const {
    return rotation * point + translation;
  }
  Pose Inverse() const;
  Pose operator*(const Pose& other) const;
};

// Pinhole camera inside a dome. The world frame is centred on the dome.
//   X_cam = rotation * (X_world - v_off),   P = (R | -R v_off)
struct CameraRig {
  CameraIntrinsics intrinsics;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d v_off = Eigen::Vector3d::Zero();
  MediaStack media;
  DomeGeometry dome;

  const Eigen::Vector3d& camera_center() const { return v_off; }
  Eigen::Vector3d WorldToCamera(const Eigen::Vector3d& point_world) const {
    return rotation * (point_world - v_off);
  }
  Eigen::Matrix<double, 3, 4> ProjectionMatrix() const;

  bool IsCentered() const;

  // Throws when any invariant is violated; returns soft warnings.
  std::vector<std::string> Validate() const;
};

struct Ray {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();

  Eigen::Vector3d PointAt(double t) const { return origin + t * direction; }
};

// The segments of one light path between the pinhole and the water. For the
// thin model there is no glass segment and inner_point == outer_point.
struct LightPath {
  Ray air_segment;
  std::optional<Ray> glass_segment;
  Ray water_segment;
  Eigen::Vector3d inner_point = Eigen::Vector3d::Zero();
  Eigen::Vector3d outer_point = Eigen::Vector3d::Zero();
  Eigen::Vector3d inner_normal = Eigen::Vector3d::UnitZ();  // outward
  Eigen::Vector3d outer_normal = Eigen::Vector3d::UnitZ();  // outward
};

struct RefractionAxis {
  // Unit vector from the dome centre towards the camera centre.
  Eigen::Vector3d direction_world = Eigen::Vector3d::UnitZ();
  // Homogeneous image of the dome centre, K R (0 - v_off). The sign is kept:
  // a negative third coordinate means the dome centre lies behind the camera.
  // A zero third coordinate is an ideal point (axis parallel to the image).
  Eigen::Vector3d refraction_center_px = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d positive_pole = Eigen::Vector3d::Zero();
  Eigen::Vector3d negative_pole = Eigen::Vector3d::Zero();

  bool IsIdeal(double relative_tolerance = 1e-12) const;
  // Euclidean pixel, or nullopt for an ideal point.
  std::optional<Eigen::Vector2d> EuclideanCenter() const;
};

// Rodrigues' formula.
Eigen::Matrix3d AngleAxisToRotation(const Eigen::Vector3d& angle_axis);
Eigen::Vector3d RotationToAngleAxis(const Eigen::Matrix3d& rotation);
// Geodesic angle of a rotation matrix, in radians.
double RotationAngle(const Eigen::Matrix3d& rotation);

}  // namespace domeport

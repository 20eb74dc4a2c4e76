#pragma once

#include <Eigen/Core>

#include "domeport/types.h"

namespace domeport {

// Refracts a unit direction at an interface (vector form of Snell's law).
// The normal is flipped internally to face the incoming ray. Throws
// kTotalInternalReflection when no transmitted ray exists.
Eigen::Vector3d SnellRefract(const Eigen::Vector3d& incident,
                             const Eigen::Vector3d& normal, double mu_in,
                             double mu_out);

// First intersection of the ray with the origin-centred sphere along the
// positive ray direction. Throws kNoIntersection on a miss and
// kAmbiguousTangent for grazing rays.
Eigen::Vector3d IntersectSphere(const Ray& ray, double radius);

// Traces the camera ray of a pixel through the dome into the water.
LightPath BackProject(const CameraRig& rig, const Eigen::Vector2d& pixel);

// Refraction axis, refraction centre and poles. Throws kCenteredCamera when
// |v_off| is below kTolerances.centered_camera_m.
RefractionAxis ComputeRefractionAxis(const CameraRig& rig);

// Change of direction of a ray hitting an interface at incidence angle alpha
// when passing from mu_in into the denser mu_out.
double AngularDeviation(double alpha, double mu_in, double mu_out);

// |mu_in (i x n) - mu_out (t x n)|: zero when i and t obey Snell's law at the
// normal n (unit vectors), including the plane-of-incidence condition.
double SnellResidual(const Eigen::Vector3d& incident,
                     const Eigen::Vector3d& refracted,
                     const Eigen::Vector3d& normal, double mu_in, double mu_out);

double PointToLineDistance(const Ray& line, const Eigen::Vector3d& point);

// Worst-case violations of the LightPath invariants.
struct LightPathCheck {
  double sphere_error = 0.0;
  double direction_norm_error = 0.0;
  double coplanarity = 0.0;
  double snell_residual = 0.0;
  bool transmitted_side_ok = true;
};

LightPathCheck CheckLightPath(const CameraRig& rig, const LightPath& path);

}  // namespace domeport

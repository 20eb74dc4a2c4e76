#pragma once

#include <array>

#include <Eigen/Core>

#include "domeport/types.h"

namespace domeport {

// 2D frame of the plane containing the refraction axis and a scene point.
// z1 points from the dome centre to the camera centre; the camera sits at
// (0, d) and the scene point at point_2d = (X . z2, X . z1) with X . z2 >= 0.
struct PlaneOfRefraction {
  Eigen::Vector3d z1_axis = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d z2_axis = Eigen::Vector3d::UnitX();
  double d = 0.0;
  Eigen::Vector2d point_2d = Eigen::Vector2d::Zero();

  Eigen::Vector3d ToWorld(const Eigen::Vector2d& p) const {
    return p.x() * z2_axis + p.y() * z1_axis;
  }
};

// Throws kDegenerate when the camera is centred or X lies on the axis.
PlaneOfRefraction MakePlaneOfRefraction(const CameraRig& rig,
                                        const Eigen::Vector3d& point_world);

struct ProjectionResult {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  // Refraction point on the inner interface, in plane-of-refraction
  // coordinates (metres). Lies on x^2 + y^2 = r^2.
  Eigen::Vector2d refraction_point_2d = Eigen::Vector2d::Zero();
  double snell_residual = 0.0;
  // Thin model: real polynomial roots inside [-r, r].
  int branch_count = 0;
  // Thick model: back-projection evaluations of the line search.
  int iterations = 0;
  // Distance from the scene point to the back-projected water line.
  double line_distance_m = 0.0;
};

// Plain pinhole projection ignoring the dome. Throws kBehindCamera for
// non-positive depth.
Eigen::Vector2d ProjectInAir(const CameraRig& rig,
                             const Eigen::Vector3d& point_world);

// Coefficients (constant term first) of the degree-6 polynomial in y whose
// roots contain the refraction point m = (x, y) of a thin dome, in units of
// the dome radius: u = scene point, d = decentering, eta = mu_air / mu_water.
// See docs/thin_dome_polynomial.md.
std::array<double, 7> ThinDomePolynomial(double ux, double uy, double d,
                                         double eta);

// The unsquared form P(y) + x Q(y) = 0 that the polynomial is built from.
struct ThinDomeHalfPolynomials {
  std::array<double, 4> p;
  std::array<double, 3> q;
};
ThinDomeHalfPolynomials ThinDomeHalfPolynomial(double ux, double uy, double d,
                                               double eta);

// Analytic forward projection through a thin dome.
ProjectionResult ProjectThinAnalytic(const CameraRig& rig,
                                     const Eigen::Vector3d& point_world);

struct ThickProjectionOptions {
  int max_iterations = 100;
  double pixel_tolerance = 1e-11;
};

// Forward projection through a thick dome by a bracketed 1D search along the
// line through the refraction centre and the in-air projection.
ProjectionResult ProjectThickIterative(const CameraRig& rig,
                                       const Eigen::Vector3d& point_world,
                                       const ThickProjectionOptions& options = {});

// Dispatches on rig.dome.model. Centred rigs reduce to the pinhole.
ProjectionResult Project(const CameraRig& rig, const Eigen::Vector3d& point_world);

}  // namespace domeport

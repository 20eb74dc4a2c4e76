#include "domeport/projection.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "domeport/error.h"
#include "domeport/geometry.h"
#include "domeport/polynomial.h"
#include "domeport/tolerances.h"
#include "domeport/trace_kernel.h"

namespace domeport {
namespace {

constexpr double kOnAxisRelative = 1e-12;

Eigen::Vector3d FirstHitFromCamera(const CameraRig& rig,
                                   const Eigen::Vector3d& direction) {
  Eigen::Vector3d point;
  kernel::IntersectSphere<double>(rig.v_off, direction.normalized(),
                                  rig.dome.inner_radius, &point);
  return point;
}

// Pinhole fallback for a centred camera: every ray passes the dome along the
// normal, so nothing bends.
ProjectionResult CenteredProjection(const CameraRig& rig,
                                    const Eigen::Vector3d& point_world) {
  ProjectionResult result;
  result.pixel = ProjectInAir(rig, point_world);
  const Eigen::Vector3d hit = FirstHitFromCamera(rig, point_world - rig.v_off);
  const Eigen::Vector3d local = rig.rotation * hit;
  result.refraction_point_2d = {std::hypot(local.x(), local.y()), local.z()};
  return result;
}

// Scene point on the refraction axis: the ray travels along the axis.
ProjectionResult OnAxisProjection(const CameraRig& rig,
                                  const Eigen::Vector3d& point_world) {
  const Eigen::Vector3d point_camera = rig.WorldToCamera(point_world);
  if (point_camera.z() <= 0.0) {
    Throw(ErrorCode::kDegenerate,
          "scene point lies on the refraction axis behind the camera");
  }
  ProjectionResult result;
  result.pixel = rig.intrinsics.CameraToPixel(point_camera);
  const double side =
      point_world.dot(rig.v_off) >= 0.0 ? rig.dome.inner_radius
                                        : -rig.dome.inner_radius;
  result.refraction_point_2d = {0.0, side};
  return result;
}

bool IsOnAxis(const CameraRig& rig, const Eigen::Vector3d& point_world) {
  const Eigen::Vector3d z1 = rig.v_off.normalized();
  const Eigen::Vector3d perpendicular =
      point_world - point_world.dot(z1) * z1;
  return perpendicular.norm() <=
         kOnAxisRelative * std::max(1.0, point_world.norm());
}

// sin of the angle between the refracted ray at m = (sin psi, cos psi) and
// the direction from m to the scene point, in units of the dome radius.
double ThinAngularResidual(double psi, const Eigen::Vector2d& point, double d,
                           double eta) {
  const Eigen::Vector2d m(std::sin(psi), std::cos(psi));
  const Eigen::Vector2d air = Eigen::Vector2d(m.x(), m.y() - d).normalized();
  const double cos_incident = air.dot(m);
  const double k = 1.0 - eta * eta * (1.0 - cos_incident * cos_incident);
  if (k < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::Vector2d water =
      eta * air + (std::sqrt(k) - eta * cos_incident) * m;
  const Eigen::Vector2d to_point = point - m;
  return (water.x() * to_point.y() - water.y() * to_point.x()) /
         to_point.norm();
}

double PolishAngle(double psi, const Eigen::Vector2d& point, double d,
                   double eta) {
  constexpr double kStep = 1e-7;
  for (int iteration = 0; iteration < 12; ++iteration) {
    const double f = ThinAngularResidual(psi, point, d, eta);
    if (!std::isfinite(f) || f == 0.0) break;
    const double df = (ThinAngularResidual(psi + kStep, point, d, eta) -
                       ThinAngularResidual(psi - kStep, point, d, eta)) /
                      (2.0 * kStep);
    if (!std::isfinite(df) || df == 0.0) break;
    const double update = f / df;
    psi -= update;
    if (std::abs(update) < 1e-15) break;
  }
  return psi;
}

struct ThinCandidate {
  double snell_residual = std::numeric_limits<double>::infinity();
  Eigen::Vector2d m = Eigen::Vector2d::Zero();  // unit-radius plane coords
};

std::optional<ThinCandidate> EvaluateThinCandidate(
    const CameraRig& rig, const PlaneOfRefraction& plane, double psi) {
  const double radius = rig.dome.inner_radius;
  const Eigen::Vector2d m_unit(std::sin(psi), std::cos(psi));
  if (m_unit.x() < -1e-9) return std::nullopt;  // wrong half-plane

  const Eigen::Vector3d m_world = radius * plane.ToWorld(m_unit);
  const Eigen::Vector3d point_world =
      plane.ToWorld(plane.point_2d);  // in-plane representative of X
  const Eigen::Vector3d air = (m_world - rig.v_off).normalized();
  const Eigen::Vector3d normal = m_world / radius;
  Eigen::Vector3d water;
  if (kernel::Refract<double>(air, normal, rig.media.mu_air, rig.media.mu_water,
                              &water) != kernel::TraceStatus::kOk) {
    return std::nullopt;
  }
  const Eigen::Vector3d to_point = point_world - m_world;
  if (to_point.dot(water) <= 0.0) return std::nullopt;  // point behind ray
  if (rig.WorldToCamera(m_world).z() <= 0.0) return std::nullopt;  // not imaged

  ThinCandidate candidate;
  candidate.m = m_unit;
  candidate.snell_residual = SnellResidual(air, to_point.normalized(), normal,
                                           rig.media.mu_air, rig.media.mu_water);
  return candidate;
}

}  // namespace

PlaneOfRefraction MakePlaneOfRefraction(const CameraRig& rig,
                                        const Eigen::Vector3d& point_world) {
  if (rig.IsCentered()) {
    Throw(ErrorCode::kDegenerate, "plane of refraction undefined: centred camera");
  }
  PlaneOfRefraction plane;
  plane.d = rig.v_off.norm();
  plane.z1_axis = rig.v_off / plane.d;
  const double along = point_world.dot(plane.z1_axis);
  const Eigen::Vector3d perpendicular = point_world - along * plane.z1_axis;
  const double across = perpendicular.norm();
  if (across <= kOnAxisRelative * std::max(1.0, point_world.norm())) {
    Throw(ErrorCode::kDegenerate,
          "plane of refraction undefined: point on the refraction axis");
  }
  plane.z2_axis = perpendicular / across;
  plane.point_2d = {across, along};
  return plane;
}

Eigen::Vector2d ProjectInAir(const CameraRig& rig,
                             const Eigen::Vector3d& point_world) {
  const Eigen::Vector3d point_camera = rig.WorldToCamera(point_world);
  if (!(point_camera.z() > 0.0)) {
    Throw(ErrorCode::kBehindCamera, "point has non-positive depth");
  }
  return rig.intrinsics.CameraToPixel(point_camera);
}

ThinDomeHalfPolynomials ThinDomeHalfPolynomial(double ux, double uy, double d,
                                               double eta) {
  const double d2 = d * d;
  const double e2 = eta * eta;
  const double ux2 = ux * ux;
  const double uy2 = uy * uy;
  ThinDomeHalfPolynomials h;
  h.p[0] = -d2 * e2 * (ux2 + uy2 + 1.0) + d2 * uy2 + uy2;
  h.p[1] = 2.0 * d * uy * (d * e2 - uy);
  h.p[2] = d2 * e2 * (ux2 + uy2 + 1.0) + d2 * (ux2 - uy2) + ux2 - uy2;
  h.p[3] = -2.0 * d * (d * e2 * uy + ux2 - uy2);
  h.q[0] = 2.0 * d2 * e2 * ux;
  h.q[1] = -2.0 * ux * uy * (d2 + 1.0);
  h.q[2] = -2.0 * d * ux * (d * e2 - 2.0 * uy);
  return h;
}

std::array<double, 7> ThinDomePolynomial(double ux, double uy, double d,
                                         double eta) {
  const ThinDomeHalfPolynomials h = ThinDomeHalfPolynomial(ux, uy, d, eta);
  // F(y) = P(y)^2 - (1 - y^2) Q(y)^2
  std::array<double, 7> f{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) f[i + j] += h.p[i] * h.p[j];
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double qq = h.q[i] * h.q[j];
      f[i + j] -= qq;
      f[i + j + 2] += qq;
    }
  }
  return f;
}

ProjectionResult ProjectThinAnalytic(const CameraRig& rig,
                                     const Eigen::Vector3d& point_world) {
  if (rig.dome.model != DomeModel::kThin) {
    Throw(ErrorCode::kInvalidArgument, "ProjectThinAnalytic needs a thin dome");
  }
  const double radius = rig.dome.inner_radius;
  if (!(point_world.norm() > radius)) {
    Throw(ErrorCode::kInvalidArgument, "scene point must lie outside the dome");
  }
  if (rig.IsCentered()) return CenteredProjection(rig, point_world);
  if (IsOnAxis(rig, point_world)) return OnAxisProjection(rig, point_world);

  const PlaneOfRefraction plane = MakePlaneOfRefraction(rig, point_world);
  const Eigen::Vector2d point_unit = plane.point_2d / radius;
  const double d_unit = plane.d / radius;
  const double eta = rig.media.mu_air / rig.media.mu_water;

  const std::array<double, 7> coefficients =
      ThinDomePolynomial(point_unit.x(), point_unit.y(), d_unit, eta);
  const ThinDomeHalfPolynomials half =
      ThinDomeHalfPolynomial(point_unit.x(), point_unit.y(), d_unit, eta);
  const std::vector<double> roots =
      RealPolynomialRoots(coefficients, kTolerances.root_imaginary);

  ProjectionResult result;
  std::optional<ThinCandidate> best;
  for (double y : roots) {
    if (y < -1.0 - 1e-9 || y > 1.0 + 1e-9) continue;
    ++result.branch_count;
    y = std::clamp(y, -1.0, 1.0);
    // The unsquared relation P + x Q = 0 fixes the sign of x.
    const double q = EvaluatePolynomial(half.q, y);
    const double p = EvaluatePolynomial(half.p, y);
    if (std::abs(q) > 1e-12 && -p / q < 0.0 &&
        std::abs(p / q) > 1e-6) {
      continue;
    }
    const double x = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double psi = PolishAngle(std::atan2(x, y), point_unit, d_unit, eta);
    const std::optional<ThinCandidate> candidate =
        EvaluateThinCandidate(rig, plane, psi);
    if (!candidate || candidate->snell_residual >= kTolerances.root_snell) {
      continue;
    }
    if (!best || candidate->snell_residual < best->snell_residual) {
      best = candidate;
    }
  }
  if (!best) {
    Throw(ErrorCode::kNoPhysicalRoot,
          "no polynomial root satisfies Snell's law and visibility");
  }

  const Eigen::Vector3d m_world = radius * plane.ToWorld(best->m);
  result.pixel = rig.intrinsics.CameraToPixel(rig.WorldToCamera(m_world));
  result.refraction_point_2d = radius * best->m;
  result.snell_residual = best->snell_residual;
  const Eigen::Vector3d water =
      SnellRefract((m_world - rig.v_off).normalized(), m_world / radius,
                   rig.media.mu_air, rig.media.mu_water);
  result.line_distance_m = PointToLineDistance({m_world, water}, point_world);
  return result;
}

ProjectionResult ProjectThickIterative(const CameraRig& rig,
                                       const Eigen::Vector3d& point_world,
                                       const ThickProjectionOptions& options) {
  if (rig.dome.model != DomeModel::kThick) {
    Throw(ErrorCode::kInvalidArgument,
          "ProjectThickIterative needs a thick dome");
  }
  if (!(point_world.norm() > rig.dome.outer_radius())) {
    Throw(ErrorCode::kInvalidArgument, "scene point must lie outside the dome");
  }
  if (rig.IsCentered()) return CenteredProjection(rig, point_world);
  if (IsOnAxis(rig, point_world)) return OnAxisProjection(rig, point_world);

  const Eigen::Vector2d in_air = ProjectInAir(rig, point_world);
  const RefractionAxis axis = ComputeRefractionAxis(rig);
  const Eigen::Vector3d line =
      in_air.homogeneous().cross(axis.refraction_center_px);
  const double line_norm = line.head<2>().norm();
  if (line_norm <= 1e-300) return OnAxisProjection(rig, point_world);
  const Eigen::Vector2d along(line.y() / line_norm, -line.x() / line_norm);
  const Eigen::Vector3d plane_normal =
      axis.direction_world.cross(point_world).normalized();

  int evaluations = 0;
  kernel::TracedPath<double> traced;
  // Signed in-plane distance from the scene point to the water line of the
  // pixel in_air + t * along.
  auto signed_distance = [&](double t) -> std::optional<double> {
    ++evaluations;
    const Eigen::Vector2d pixel = in_air + t * along;
    const Eigen::Vector3d direction = kernel::PixelDirectionWorld<double>(
        rig.intrinsics, rig.rotation, pixel);
    if (kernel::TraceToWater<double>(rig.v_off, direction, rig.dome, rig.media,
                                     &traced) != kernel::TraceStatus::kOk) {
      return std::nullopt;
    }
    const Eigen::Vector3d water = traced.water_direction.normalized();
    return (point_world - traced.outer_point).cross(water).dot(plane_normal);
  };

  const double distance_scale =
      std::max(1.0, (point_world - rig.v_off).norm());
  const double f_tolerance = 1e-15 * distance_scale;

  double a = 0.0;
  std::optional<double> fa_opt = signed_distance(a);
  if (!fa_opt) {
    Throw(ErrorCode::kNoPhysicalRoot, "in-air pixel cannot be traced");
  }
  double fa = *fa_opt;
  double b = a;
  double fb = fa;
  bool bracketed = std::abs(fa) <= f_tolerance;
  // Expand symmetrically around the in-air pixel, out to a few image
  // diagonals.
  const double bound = 4.0 * rig.intrinsics.Diagonal();
  for (double step = 0.5; !bracketed && step <= bound; step *= 2.0) {
    for (double sign : {1.0, -1.0}) {
      const std::optional<double> f = signed_distance(sign * step);
      if (!f) continue;
      if ((*f < 0.0) != (fa < 0.0) || std::abs(*f) <= f_tolerance) {
        b = sign * step;
        fb = *f;
        bracketed = true;
        break;
      }
    }
  }
  if (!bracketed) {
    Throw(ErrorCode::kNoPhysicalRoot,
          "no pixel on the refraction line reaches the scene point");
  }

  // Illinois false position on [a, b].
  double c = b;
  double fc = fb;
  bool converged = std::abs(fb) <= f_tolerance || std::abs(fa) <= f_tolerance;
  if (std::abs(fa) <= f_tolerance) {
    c = a;
    fc = fa;
  }
  int iteration = 0;
  for (; !converged && iteration < options.max_iterations; ++iteration) {
    double next = b - fb * (b - a) / (fb - fa);
    if (!(std::min(a, b) < next && next < std::max(a, b))) {
      next = 0.5 * (a + b);
    }
    const std::optional<double> f_next = signed_distance(next);
    if (!f_next) {
      Throw(ErrorCode::kNoPhysicalRoot, "line search left the traceable region");
    }
    const double step = std::abs(next - c);
    c = next;
    fc = *f_next;
    if (std::abs(fc) <= f_tolerance || step < options.pixel_tolerance ||
        std::abs(b - a) < options.pixel_tolerance) {
      converged = true;
      break;
    }
    if ((fc < 0.0) != (fb < 0.0)) {
      a = b;
      fa = fb;
    } else {
      fa *= 0.5;
    }
    b = c;
    fb = fc;
  }
  if (!converged) {
    Throw(ErrorCode::kNonConvergence,
          "thick-dome projection did not converge after " +
              std::to_string(options.max_iterations) +
              " iterations, last residual " + std::to_string(std::abs(fc)) +
              " m");
  }

  ProjectionResult result;
  result.pixel = in_air + c * along;
  result.iterations = evaluations;
  const LightPath path = BackProject(rig, result.pixel);
  result.line_distance_m = PointToLineDistance(path.water_segment, point_world);
  result.snell_residual = CheckLightPath(rig, path).snell_residual;
  const PlaneOfRefraction plane = MakePlaneOfRefraction(rig, point_world);
  result.refraction_point_2d = {path.inner_point.dot(plane.z2_axis),
                                path.inner_point.dot(plane.z1_axis)};
  return result;
}

ProjectionResult Project(const CameraRig& rig,
                         const Eigen::Vector3d& point_world) {
  if (rig.dome.model == DomeModel::kThin) {
    return ProjectThinAnalytic(rig, point_world);
  }
  return ProjectThickIterative(rig, point_world);
}

}  // namespace domeport

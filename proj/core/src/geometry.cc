#include "domeport/geometry.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "domeport/error.h"
#include "domeport/tolerances.h"
#include "domeport/trace_kernel.h"

namespace domeport {
namespace {

void ThrowForStatus(kernel::TraceStatus status, const std::string& context) {
  switch (status) {
    case kernel::TraceStatus::kOk:
      return;
    case kernel::TraceStatus::kNoIntersection:
      Throw(ErrorCode::kNoIntersection, context + ": ray misses the sphere");
    case kernel::TraceStatus::kTangent:
      Throw(ErrorCode::kAmbiguousTangent, context + ": grazing intersection");
    case kernel::TraceStatus::kTotalInternalReflection:
      Throw(ErrorCode::kTotalInternalReflection,
            context + ": total internal reflection");
  }
}

double TripleProduct(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                     const Eigen::Vector3d& c) {
  return a.cross(b).dot(c);
}

double InterfaceResidual(const Eigen::Vector3d& incident,
                         const Eigen::Vector3d& refracted,
                         const Eigen::Vector3d& normal, double mu_in,
                         double mu_out, bool* side_ok) {
  if ((incident.dot(normal) > 0.0) != (refracted.dot(normal) > 0.0)) {
    *side_ok = false;
  }
  return SnellResidual(incident, refracted, normal, mu_in, mu_out);
}

}  // namespace

Eigen::Vector3d SnellRefract(const Eigen::Vector3d& incident,
                             const Eigen::Vector3d& normal, double mu_in,
                             double mu_out) {
  if (!(mu_in > 0.0 && mu_out > 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "refractive indices must be positive");
  }
  Eigen::Vector3d refracted;
  ThrowForStatus(kernel::Refract<double>(incident.normalized(),
                                         normal.normalized(), mu_in, mu_out,
                                         &refracted),
                 "SnellRefract");
  return refracted.normalized();
}

Eigen::Vector3d IntersectSphere(const Ray& ray, double radius) {
  if (!(radius > 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "sphere radius must be positive");
  }
  Eigen::Vector3d point;
  ThrowForStatus(kernel::IntersectSphere<double>(
                     ray.origin, ray.direction.normalized(), radius, &point),
                 "IntersectSphere");
  return point;
}

LightPath BackProject(const CameraRig& rig, const Eigen::Vector2d& pixel) {
  if (!pixel.allFinite()) {
    Throw(ErrorCode::kInvalidArgument, "pixel must be finite");
  }
  if (!(rig.v_off.norm() < rig.dome.inner_radius)) {
    Throw(ErrorCode::kInvalidArgument, "camera centre outside the dome");
  }
  const Eigen::Vector3d air_direction =
      kernel::PixelDirectionWorld<double>(rig.intrinsics, rig.rotation, pixel);

  kernel::TracedPath<double> traced;
  ThrowForStatus(kernel::TraceToWater<double>(rig.v_off, air_direction,
                                              rig.dome, rig.media, &traced),
                 "BackProject");

  LightPath path;
  path.air_segment = {rig.v_off, air_direction};
  path.inner_point = traced.inner_point;
  path.outer_point = traced.outer_point;
  path.inner_normal = traced.inner_point.normalized();
  path.outer_normal = traced.outer_point.normalized();
  if (rig.dome.model == DomeModel::kThick) {
    path.glass_segment =
        Ray{traced.inner_point, traced.glass_direction.normalized()};
  }
  path.water_segment = {traced.outer_point, traced.water_direction.normalized()};
  return path;
}

RefractionAxis ComputeRefractionAxis(const CameraRig& rig) {
  const double distance = rig.v_off.norm();
  if (distance < kTolerances.centered_camera_m) {
    Throw(ErrorCode::kCenteredCamera,
          "refraction axis is undefined for a centred camera");
  }
  RefractionAxis axis;
  axis.direction_world = rig.v_off / distance;
  // Image of the dome centre (world origin), scaled by 1 / |v_off|.
  axis.refraction_center_px =
      rig.intrinsics.K() * (rig.rotation * (-axis.direction_world));
  axis.positive_pole = rig.dome.inner_radius * axis.direction_world;
  axis.negative_pole = -axis.positive_pole;
  return axis;
}

double AngularDeviation(double alpha, double mu_in, double mu_out) {
  if (!(alpha >= 0.0 && alpha <= 0.5 * std::numbers::pi + 1e-15)) {
    Throw(ErrorCode::kInvalidArgument, "alpha must lie in [0, pi/2]");
  }
  if (!(mu_in > 0.0 && mu_out >= mu_in)) {
    Throw(ErrorCode::kInvalidArgument, "expected 0 < mu_in <= mu_out");
  }
  const double s = std::min(1.0, mu_in / mu_out * std::sin(alpha));
  return alpha - std::asin(s);
}

double SnellResidual(const Eigen::Vector3d& incident,
                     const Eigen::Vector3d& refracted,
                     const Eigen::Vector3d& normal, double mu_in,
                     double mu_out) {
  return (mu_in * incident.cross(normal) - mu_out * refracted.cross(normal))
      .norm();
}

double PointToLineDistance(const Ray& line, const Eigen::Vector3d& point) {
  return (point - line.origin).cross(line.direction.normalized()).norm();
}

LightPathCheck CheckLightPath(const CameraRig& rig, const LightPath& path) {
  LightPathCheck check;
  const double r_in = rig.dome.inner_radius;
  const double r_out = rig.dome.outer_radius();
  check.sphere_error = std::max(std::abs(path.inner_point.norm() - r_in),
                                std::abs(path.outer_point.norm() - r_out));

  std::vector<Eigen::Vector3d> directions = {path.air_segment.direction,
                                             path.water_segment.direction};
  if (path.glass_segment) directions.push_back(path.glass_segment->direction);
  for (const Eigen::Vector3d& d : directions) {
    check.direction_norm_error =
        std::max(check.direction_norm_error, std::abs(d.norm() - 1.0));
  }

  // Every direction and normal must lie in the plane spanned by v_off and the
  // air segment.
  const Eigen::Vector3d& air = path.air_segment.direction;
  Eigen::Vector3d reference = rig.v_off.norm() > kTolerances.centered_camera_m
                                  ? Eigen::Vector3d(rig.v_off.normalized())
                                  : path.inner_normal;
  directions.push_back(path.inner_normal);
  directions.push_back(path.outer_normal);
  for (const Eigen::Vector3d& d : directions) {
    check.coplanarity =
        std::max(check.coplanarity, std::abs(TripleProduct(air, d, reference)));
  }

  const MediaStack& media = rig.media;
  if (path.glass_segment) {
    const Eigen::Vector3d& glass = path.glass_segment->direction;
    check.snell_residual =
        std::max(InterfaceResidual(air, glass, path.inner_normal, media.mu_air,
                                   media.mu_glass, &check.transmitted_side_ok),
                 InterfaceResidual(glass, path.water_segment.direction,
                                   path.outer_normal, media.mu_glass,
                                   media.mu_water, &check.transmitted_side_ok));
  } else {
    check.snell_residual = InterfaceResidual(
        air, path.water_segment.direction, path.inner_normal, media.mu_air,
        media.mu_water, &check.transmitted_side_ok);
  }
  return check;
}

}  // namespace domeport

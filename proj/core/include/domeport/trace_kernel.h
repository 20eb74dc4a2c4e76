#pragma once

// Scalar-generic ray tracing through the dome. Instantiated with double for
// the public API and with Eigen::AutoDiffScalar for exact Jacobians in the
// calibration solver. Branch decisions always use the primal value.

#include <cmath>
#include <type_traits>

#include <Eigen/Core>

#include "domeport/tolerances.h"
#include "domeport/types.h"

namespace domeport::kernel {

template <typename T>
using Vec3 = Eigen::Matrix<T, 3, 1>;

template <typename T>
double Value(const T& x) {
  if constexpr (std::is_arithmetic_v<T>) {
    return static_cast<double>(x);
  } else {
    return x.value();
  }
}

template <typename T>
T Sqrt(const T& x) {
  using std::sqrt;
  return sqrt(x);
}

enum class TraceStatus { kOk, kNoIntersection, kTangent, kTotalInternalReflection };

// Snell refraction of a unit direction at an interface with unit normal. The
// normal may face either side; it is flipped to oppose the incident ray.
template <typename T>
TraceStatus Refract(const Vec3<T>& incident, Vec3<T> normal, double mu_in,
                    double mu_out, Vec3<T>* refracted) {
  T cos_incident = -incident.dot(normal);
  if (Value(cos_incident) < 0.0) {
    normal = -normal;
    cos_incident = -cos_incident;
  }
  const double eta = mu_in / mu_out;
  const T k = T(1.0) - eta * eta * (T(1.0) - cos_incident * cos_incident);
  if (Value(k) < 0.0) return TraceStatus::kTotalInternalReflection;
  *refracted = eta * incident + (eta * cos_incident - Sqrt(k)) * normal;
  return TraceStatus::kOk;
}

// First positive intersection of origin + t * direction (unit) with the
// origin-centred sphere of the given radius.
template <typename T>
TraceStatus IntersectSphere(const Vec3<T>& origin, const Vec3<T>& direction,
                            double radius, Vec3<T>* point) {
  const T b = origin.dot(direction);
  const T c = origin.squaredNorm() - T(radius * radius);
  const T discriminant = b * b - c;
  const double disc = Value(discriminant);
  if (disc < 0.0) return TraceStatus::kNoIntersection;
  if (disc < kTolerances.grazing_discriminant) return TraceStatus::kTangent;
  const T s = Sqrt(discriminant);
  // Numerically stable pair of roots.
  T t_near, t_far;
  if (Value(b) > 0.0) {
    const T q = -(b + s);
    t_near = q;
    t_far = c / q;
  } else {
    const T q = s - b;
    t_far = q;
    t_near = c / q;
  }
  if (Value(t_near) > Value(t_far)) std::swap(t_near, t_far);
  T t;
  if (Value(t_near) > 0.0) {
    t = t_near;
  } else if (Value(t_far) > 0.0) {
    t = t_far;
  } else {
    return TraceStatus::kNoIntersection;
  }
  *point = origin + t * direction;
  return TraceStatus::kOk;
}

template <typename T>
struct TracedPath {
  Vec3<T> air_direction;
  Vec3<T> inner_point;
  Vec3<T> glass_direction;  // unused for thin domes
  Vec3<T> outer_point;
  Vec3<T> water_direction;
};

// Traces a ray leaving the camera centre (inside the inner sphere) through
// the dome into the water.
template <typename T>
TraceStatus TraceToWater(const Vec3<T>& camera_center,
                         const Vec3<T>& air_direction, const DomeGeometry& dome,
                         const MediaStack& media, TracedPath<T>* path) {
  path->air_direction = air_direction;
  TraceStatus status = IntersectSphere<T>(camera_center, air_direction,
                                          dome.inner_radius, &path->inner_point);
  if (status != TraceStatus::kOk) return status;
  const Vec3<T> inner_normal = path->inner_point / T(dome.inner_radius);

  if (dome.model == DomeModel::kThin) {
    status = Refract<T>(air_direction, inner_normal, media.mu_air,
                        media.mu_water, &path->water_direction);
    path->glass_direction = path->water_direction;
    path->outer_point = path->inner_point;
    return status;
  }

  status = Refract<T>(air_direction, inner_normal, media.mu_air, media.mu_glass,
                      &path->glass_direction);
  if (status != TraceStatus::kOk) return status;
  const double outer_radius = dome.outer_radius();
  status = IntersectSphere<T>(path->inner_point, path->glass_direction,
                              outer_radius, &path->outer_point);
  if (status != TraceStatus::kOk) return status;
  const Vec3<T> outer_normal = path->outer_point / T(outer_radius);
  return Refract<T>(path->glass_direction, outer_normal, media.mu_glass,
                    media.mu_water, &path->water_direction);
}

// World-frame unit direction of the camera ray through a pixel.
template <typename T>
Vec3<T> PixelDirectionWorld(const CameraIntrinsics& intrinsics,
                            const Eigen::Matrix3d& rotation,
                            const Eigen::Vector2d& pixel) {
  const Eigen::Vector3d ray = intrinsics.PixelToRay(pixel);
  const Eigen::Vector3d world = (rotation.transpose() * ray).normalized();
  return world.cast<T>();
}

}  // namespace domeport::kernel

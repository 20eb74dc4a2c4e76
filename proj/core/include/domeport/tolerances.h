#pragma once

namespace domeport {

// Numerical thresholds shared by the library and its tests. Tests reference
// this record rather than repeating literals.
struct Tolerances {
  // Geometry.
  double unit_length = 1e-12;
  double sphere_point = 1e-10;
  double coplanarity = 1e-10;
  double snell = 1e-10;
  double grazing_discriminant = 1e-14;
  double centered_camera_m = 1e-9;
  double rotation_orthonormal = 1e-10;
  double axis_distance_m = 1e-9;

  // Projection.
  double root_imaginary = 1e-8;  // scaled by (1 + |real|)
  double root_snell = 1e-9;
  double projection_line_distance_m = 1e-9;
  double projection_pixel_on_line = 1e-6;
  int thick_max_iterations = 100;

  // Direct solver.
  double null_vector_residual = 1e-8;

  // Calibration.
  double board_parallel_deg = 0.5;
};

inline constexpr Tolerances kTolerances{};

}  // namespace domeport

#include "domeport/direct_solver.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "domeport/error.h"
#include "domeport/homography.h"

namespace domeport {
namespace {

Eigen::Vector3d CanonicalCenter(Eigen::Vector3d r) {
  r.normalize();
  if (r.z() < 0.0) r = -r;
  return r;
}

void CheckImage(const ImageObservation& image, const ChessboardSpec& board) {
  board.Validate();
  if (static_cast<int>(image.corners_px.size()) != board.corner_count()) {
    Throw(ErrorCode::kLengthMismatch,
          "image '" + image.id + "' does not have rows*cols corners");
  }
  if (image.corners_px.size() < 8) {
    Throw(ErrorCode::kInsufficientCorrespondences,
          "center estimation needs at least 8 correspondences");
  }
}

// Per-image data for the joint refinement, in Hartley-normalized coordinates.
struct ImageSystem {
  Eigen::Matrix3d board_transform;
  Eigen::Matrix3d image_transform;
  std::vector<Eigen::Vector3d> board_points;  // normalized, homogeneous
  std::vector<Eigen::Vector3d> image_points;  // normalized, homogeneous
  std::vector<Eigen::Vector3d> board_points_raw;
  std::vector<Eigen::Vector2d> image_points_px;
  double sqrt_weight = 1.0;
};

// Orthonormal basis of the plane perpendicular to a unit vector.
Eigen::Matrix<double, 3, 2> PerpendicularBasis(const Eigen::Vector3d& v) {
  const Eigen::Vector3d helper = std::abs(v.x()) < 0.9
                                     ? Eigen::Vector3d::UnitX()
                                     : Eigen::Vector3d::UnitY();
  Eigen::Matrix<double, 3, 2> basis;
  basis.col(0) = v.cross(helper).normalized();
  basis.col(1) = v.cross(basis.col(0));
  return basis;
}

// Distances of the corners to their displacement lines through r, after an
// algebraic fit of the image's homography with r held fixed.
void AppendLineResiduals(const ImageSystem& system,
                         const Eigen::Vector3d& center_px,
                         std::vector<double>* residuals) {
  const Eigen::Vector3d center_n =
      (system.image_transform * center_px).normalized();
  const Eigen::Matrix<double, 3, 2> basis = PerpendicularBasis(center_n);
  const int n = static_cast<int>(system.board_points.size());
  Eigen::MatrixXd design(n, 6);
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector2d projected =
        basis.transpose() * system.image_points[k];
    for (int b = 0; b < 3; ++b) {
      for (int a = 0; a < 2; ++a) {
        design(k, a + 2 * b) = projected(a) * system.board_points[k](b);
      }
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const Eigen::VectorXd g = svd.matrixV().col(5);
  const Eigen::Matrix<double, 2, 3> g_matrix =
      Eigen::Map<const Eigen::Matrix<double, 2, 3>>(g.data());
  const Eigen::Matrix3d f_px = system.image_transform.transpose() * basis *
                               g_matrix * system.board_transform;
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector3d line = f_px * system.board_points_raw[k];
    const double norm = line.head<2>().norm();
    const double distance =
        norm > 0.0 ? line.dot(system.image_points_px[k].homogeneous()) / norm
                   : 0.0;
    residuals->push_back(system.sqrt_weight * distance);
  }
}

Eigen::VectorXd JointResiduals(const std::vector<ImageSystem>& systems,
                               const Eigen::Vector3d& center_px) {
  std::vector<double> values;
  for (const ImageSystem& system : systems) {
    AppendLineResiduals(system, center_px, &values);
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

}  // namespace

CenterEstimate EstimateCenter(const ImageObservation& image,
                              const ChessboardSpec& board,
                              const DirectSolverOptions& options) {
  CheckImage(image, board);
  const std::vector<Eigen::Vector2d> board_points = BoardPlanePoints(board);
  const Eigen::Matrix3d t_c = HartleyNormalization(board_points);
  const Eigen::Matrix3d t_r = HartleyNormalization(image.corners_px);

  const int n = static_cast<int>(board_points.size());
  Eigen::MatrixXd design(n, 9);
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector3d xc = t_c * board_points[k].homogeneous();
    const Eigen::Vector3d xr = t_r * image.corners_px[k].homogeneous();
    // Row of (x_c^T kron x_r^T) vec(F), vec stacking columns.
    for (int b = 0; b < 3; ++b) {
      for (int a = 0; a < 3; ++a) design(k, a + 3 * b) = xr(a) * xc(b);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  Eigen::Matrix<double, 9, 1> singular = Eigen::Matrix<double, 9, 1>::Zero();
  singular.head(svd.singularValues().size()) = svd.singularValues();
  const Eigen::Matrix<double, 9, 1> f = svd.matrixV().col(8);
  const Eigen::Matrix3d f_normalized = Eigen::Map<const Eigen::Matrix3d>(f.data());

  Eigen::JacobiSVD<Eigen::Matrix3d> f_svd(
      f_normalized, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d f_singular = f_svd.singularValues();
  f_singular(2) = 0.0;
  const Eigen::Matrix3d f_rank2 = f_svd.matrixU() * f_singular.asDiagonal() *
                                  f_svd.matrixV().transpose();

  CenterEstimate estimate;
  estimate.F = t_r.transpose() * f_rank2 * t_c;
  estimate.F /= estimate.F.norm();
  estimate.refraction_center_px =
      CanonicalCenter(t_r.inverse() * f_svd.matrixU().col(2));
  estimate.second_singular_ratio =
      singular(0) > 0.0 ? singular(7) / singular(0) : 0.0;
  estimate.null_space_gap = singular(8) > 0.0
                                ? singular(7) / singular(8)
                                : std::numeric_limits<double>::infinity();
  estimate.homography_error_px = HomographyMappingError(image, board);
  if (options.noise_px >= 0.0) {
    estimate.noise_px = options.noise_px;
  } else {
    // RMS distance of the corners to their lines F x_c; F has 7 degrees of
    // freedom.
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      const Eigen::Vector3d line = estimate.F * board_points[k].homogeneous();
      const double norm = line.head<2>().norm();
      if (norm > 0.0) {
        const double distance =
            line.dot(image.corners_px[k].homogeneous()) / norm;
        sum += distance * distance;
      }
    }
    estimate.noise_px = std::sqrt(sum / std::max(1, n - 7));
  }
  estimate.degeneracy_threshold = options.degeneracy_factor *
                                  std::max(estimate.noise_px, 1e-9) /
                                  options.image_diagonal_px;
  estimate.degenerate =
      estimate.second_singular_ratio < estimate.degeneracy_threshold;
  return estimate;
}

double EpipolarResidual(const CenterEstimate& estimate,
                        const ImageObservation& image,
                        const ChessboardSpec& board) {
  const std::vector<Eigen::Vector2d> board_points = BoardPlanePoints(board);
  const Eigen::Matrix3d t_c = HartleyNormalization(board_points);
  const Eigen::Matrix3d t_r = HartleyNormalization(image.corners_px);
  Eigen::Matrix3d f_normalized =
      t_r.inverse().transpose() * estimate.F * t_c.inverse();
  f_normalized /= f_normalized.norm();
  double worst = 0.0;
  for (size_t k = 0; k < board_points.size(); ++k) {
    const Eigen::Vector3d xc = t_c * board_points[k].homogeneous();
    const Eigen::Vector3d xr = t_r * image.corners_px[k].homogeneous();
    worst = std::max(worst, std::abs(xr.dot(f_normalized * xc)));
  }
  return worst;
}

CombinedCenter CombineCenters(const std::vector<CenterEstimate>& estimates,
                              const std::vector<ImageObservation>& images,
                              const ChessboardSpec& board,
                              std::vector<double> weights) {
  if (estimates.size() != images.size()) {
    Throw(ErrorCode::kLengthMismatch, "one estimate per image is required");
  }
  if (weights.empty()) {
    for (const CenterEstimate& estimate : estimates) {
      weights.push_back(estimate.homography_error_px);
    }
  }
  if (weights.size() != estimates.size()) {
    Throw(ErrorCode::kLengthMismatch, "one weight per estimate is required");
  }

  std::vector<ImageSystem> systems;
  std::vector<int> usable;
  std::vector<Eigen::Vector2d> all_points;
  const std::vector<Eigen::Vector2d> board_points = BoardPlanePoints(board);
  bool any_regular = false;
  for (size_t i = 0; i < estimates.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    any_regular = any_regular || !estimates[i].degenerate;
    CheckImage(images[i], board);
    ImageSystem system;
    system.board_transform = HartleyNormalization(board_points);
    system.image_transform = HartleyNormalization(images[i].corners_px);
    for (size_t k = 0; k < board_points.size(); ++k) {
      system.board_points_raw.push_back(board_points[k].homogeneous());
      system.board_points.push_back(system.board_transform *
                                    board_points[k].homogeneous());
      system.image_points.push_back(system.image_transform *
                                    images[i].corners_px[k].homogeneous());
    }
    system.image_points_px = images[i].corners_px;
    system.sqrt_weight = std::sqrt(weights[i]);
    all_points.insert(all_points.end(), images[i].corners_px.begin(),
                      images[i].corners_px.end());
    systems.push_back(std::move(system));
    usable.push_back(static_cast<int>(i));
  }
  if (usable.empty() || !any_regular) {
    Throw(ErrorCode::kAllDegenerate, "every center estimate is degenerate");
  }

  CombinedCenter combined;
  combined.images_used = static_cast<int>(usable.size());
  const double weight_sum = [&] {
    double sum = 0.0;
    for (int i : usable) sum += weights[i];
    return sum;
  }();
  auto rms = [&](const Eigen::VectorXd& residual) {
    return std::sqrt(residual.squaredNorm() /
                     (weight_sum * static_cast<double>(board_points.size())));
  };
  if (usable.size() == 1) {
    combined.refraction_center_px = estimates[usable[0]].refraction_center_px;
    combined.rms_line_distance_px =
        rms(JointResiduals(systems, combined.refraction_center_px));
    return combined;
  }

  // Optimize on the unit sphere of conditioned homogeneous coordinates.
  const Eigen::Matrix3d conditioning = HartleyNormalization(all_points);
  const Eigen::Matrix3d conditioning_inverse = conditioning.inverse();
  auto to_pixels = [&](const Eigen::Vector3d& c) {
    return CanonicalCenter(conditioning_inverse * c);
  };

  Eigen::Vector3d current;
  double cost = std::numeric_limits<double>::infinity();
  for (int i : usable) {
    const Eigen::Vector3d candidate =
        (conditioning * estimates[i].refraction_center_px).normalized();
    const double candidate_cost =
        JointResiduals(systems, to_pixels(candidate)).squaredNorm();
    if (candidate_cost < cost) {
      cost = candidate_cost;
      current = candidate;
    }
  }

  double lambda = 1e-6;
  constexpr double kStep = 1e-7;
  for (int iteration = 0; iteration < 100; ++iteration) {
    combined.iterations = iteration + 1;
    const Eigen::Matrix<double, 3, 2> tangent = PerpendicularBasis(current);
    const Eigen::VectorXd residual = JointResiduals(systems, to_pixels(current));
    Eigen::MatrixXd jacobian(residual.size(), 2);
    for (int p = 0; p < 2; ++p) {
      const Eigen::Vector3d plus = (current + kStep * tangent.col(p)).normalized();
      const Eigen::Vector3d minus = (current - kStep * tangent.col(p)).normalized();
      jacobian.col(p) = (JointResiduals(systems, to_pixels(plus)) -
                         JointResiduals(systems, to_pixels(minus))) /
                        (2.0 * kStep);
    }
    const Eigen::Matrix2d jtj = jacobian.transpose() * jacobian;
    const Eigen::Vector2d gradient = jacobian.transpose() * residual;
    if (gradient.norm() <= 1e-14 * (1.0 + cost)) break;
    bool accepted = false;
    double decrease = 0.0;
    while (lambda < 1e12) {
      Eigen::Matrix2d damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-18);
      const Eigen::Vector2d step = damped.ldlt().solve(-gradient);
      const Eigen::Vector3d candidate = (current + tangent * step).normalized();
      const double candidate_cost =
          JointResiduals(systems, to_pixels(candidate)).squaredNorm();
      if (std::isfinite(candidate_cost) && candidate_cost <= cost) {
        decrease = cost - candidate_cost;
        current = candidate;
        cost = candidate_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || decrease <= 1e-14 * cost) break;
  }
  combined.refraction_center_px = to_pixels(current);
  combined.rms_line_distance_px =
      rms(JointResiduals(systems, combined.refraction_center_px));
  return combined;
}

std::string DecenteringSignName(DecenteringSign sign) {
  switch (sign) {
    case DecenteringSign::kBackward:
      return "backward";
    case DecenteringSign::kForward:
      return "forward";
    case DecenteringSign::kUndetermined:
      break;
  }
  return "undetermined";
}

double ConvexityProduct(const Eigen::Vector2d& x1, const Eigen::Vector2d& x2,
                        const Eigen::Vector2d& x3, const Eigen::Vector3d& r) {
  const Eigen::Vector3d line = x1.homogeneous().cross(x3.homogeneous());
  const double scale = line.head<2>().norm();
  if (!(scale > 0.0)) return 0.0;
  const double side_point = line.dot(x2.homogeneous()) / scale;
  const double side_center = line.dot(r) / scale;
  if (std::abs(side_point) <= 1e-9 ||
      std::abs(side_center) <= 1e-12 * r.norm()) {
    return 0.0;
  }
  return side_point * side_center;
}

SignResult ConvexitySign(const ImageObservation& image,
                         const ChessboardSpec& board,
                         const Eigen::Vector3d& refraction_center) {
  CheckImage(image, board);
  Eigen::Vector3d r = refraction_center.normalized();
  if (std::abs(r.z()) > 1e-12 && r.z() < 0.0) r = -r;

  SignResult result;
  auto vote = [&](const std::vector<int>& line) {
    const int n = static_cast<int>(line.size());
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        for (int c = b + 1; c < n; ++c) {
          const double product = ConvexityProduct(
              image.corners_px[line[a]], image.corners_px[line[b]],
              image.corners_px[line[c]], r);
          if (product > 0.0) {
            ++result.positive_votes;
          } else if (product < 0.0) {
            ++result.negative_votes;
          } else {
            ++result.excluded;
          }
        }
      }
    }
  };
  for (int j = 0; j < board.rows; ++j) {
    std::vector<int> line;
    for (int i = 0; i < board.cols; ++i) line.push_back(board.Index(i, j));
    vote(line);
  }
  for (int i = 0; i < board.cols; ++i) {
    std::vector<int> line;
    for (int j = 0; j < board.rows; ++j) line.push_back(board.Index(i, j));
    vote(line);
  }

  const int counted = result.positive_votes + result.negative_votes;
  if (counted == 0) return result;
  const bool negative = result.negative_votes >= result.positive_votes;
  result.vote_fraction =
      static_cast<double>(std::max(result.positive_votes,
                                   result.negative_votes)) /
      counted;
  // A barrel pattern bows board lines away from the centre, so x2 and r fall
  // on opposite sides of the chord.
  result.oriented_center = negative ? r : Eigen::Vector3d(-r);
  if (result.vote_fraction - 0.5 < 1.0 / std::sqrt(static_cast<double>(counted))) {
    result.sign = DecenteringSign::kUndetermined;
  } else {
    result.sign =
        negative ? DecenteringSign::kBackward : DecenteringSign::kForward;
  }
  return result;
}

Eigen::Vector3d AxisFromCenter(const Eigen::Vector3d& refraction_center,
                               const CameraIntrinsics& intrinsics,
                               const Eigen::Matrix3d& rotation) {
  return (rotation.transpose() * intrinsics.KInverse() * refraction_center)
      .normalized();
}

Eigen::Vector3d DecenteringDirection(const Eigen::Vector3d& oriented_center,
                                     const CameraIntrinsics& intrinsics,
                                     const Eigen::Matrix3d& rotation) {
  return -AxisFromCenter(oriented_center, intrinsics, rotation);
}

}  // namespace domeport

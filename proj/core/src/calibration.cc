#include "domeport/calibration.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include "domeport/error.h"
#include "domeport/homography.h"
#include "domeport/parallel.h"
#include "domeport/projection.h"
#include "domeport/tolerances.h"
#include "domeport/trace_kernel.h"

namespace domeport {
namespace {

using Jet = Eigen::AutoDiffScalar<Eigen::Matrix<double, 9, 1>>;

enum class HitStatus { kOk, kTraceFailed, kParallel };

template <typename T>
using Mat3 = Eigen::Matrix<T, 3, 3>;

// Water ray of the pixel intersected with the board plane, in board
// coordinates (x, y).
template <typename T>
HitStatus BoardHit(const CameraRig& rig, const Eigen::Vector2d& pixel,
                   const kernel::Vec3<T>& v_off, const Mat3<T>& board_rotation,
                   const kernel::Vec3<T>& board_translation,
                   Eigen::Matrix<T, 2, 1>* hit) {
  const kernel::Vec3<T> direction =
      kernel::PixelDirectionWorld<T>(rig.intrinsics, rig.rotation, pixel);
  kernel::TracedPath<T> path;
  if (kernel::TraceToWater<T>(v_off, direction, rig.dome, rig.media, &path) !=
      kernel::TraceStatus::kOk) {
    return HitStatus::kTraceFailed;
  }
  const Mat3<T> to_board =
      board_rotation.transpose() * rig.rotation.template cast<T>();
  const kernel::Vec3<T> origin =
      to_board * (path.outer_point - v_off) -
      board_rotation.transpose() * board_translation;
  const kernel::Vec3<T> water = to_board * path.water_direction;
  const double parallel_limit =
      std::sin(kTolerances.board_parallel_deg * std::numbers::pi / 180.0);
  if (std::abs(kernel::Value(water.z())) <
      parallel_limit * kernel::Value(water.norm())) {
    return HitStatus::kParallel;
  }
  const T s = -origin.z() / water.z();
  if (kernel::Value(s) < 0.0) return HitStatus::kParallel;
  *hit = (origin + s * water).template head<2>();
  return HitStatus::kOk;
}

struct CornerLinearization {
  Eigen::Vector2d residual;
  Eigen::Matrix<double, 2, 3> j_voff;
  Eigen::Matrix<double, 2, 6> j_pose;
};

HitStatus Linearize(const CameraRig& rig, const Eigen::Vector2d& pixel,
                    const Eigen::Vector3d& board_point,
                    const Eigen::Vector3d& v_off, const Pose& pose,
                    CornerLinearization* out) {
  kernel::Vec3<Jet> v;
  kernel::Vec3<Jet> w;
  kernel::Vec3<Jet> t;
  for (int k = 0; k < 3; ++k) {
    v(k) = Jet(v_off(k), 9, k);
    w(k) = Jet(0.0, 9, 3 + k);
    t(k) = Jet(pose.translation(k), 9, 6 + k);
  }
  Mat3<Jet> increment = Mat3<Jet>::Identity();
  increment(0, 1) = -w(2);
  increment(0, 2) = w(1);
  increment(1, 0) = w(2);
  increment(1, 2) = -w(0);
  increment(2, 0) = -w(1);
  increment(2, 1) = w(0);
  const Mat3<Jet> rotation = increment * pose.rotation.cast<Jet>();
  Eigen::Matrix<Jet, 2, 1> hit;
  const HitStatus status = BoardHit<Jet>(rig, pixel, v, rotation, t, &hit);
  if (status != HitStatus::kOk) return status;
  for (int r = 0; r < 2; ++r) {
    out->residual(r) = board_point(r) - hit(r).value();
    const Eigen::Matrix<double, 9, 1>& d = hit(r).derivatives();
    out->j_voff.row(r) = -d.head<3>().transpose();
    out->j_pose.row(r) = -d.tail<6>().transpose();
  }
  return HitStatus::kOk;
}

std::optional<Eigen::Vector2d> ResidualOrNothing(
    const CameraRig& rig, const Eigen::Vector2d& pixel,
    const Eigen::Vector3d& board_point, const Eigen::Vector3d& v_off,
    const Pose& pose) {
  Eigen::Vector2d hit;
  const HitStatus status = BoardHit<double>(rig, pixel, v_off, pose.rotation,
                                            pose.translation, &hit);
  if (status != HitStatus::kOk) return std::nullopt;
  return Eigen::Vector2d(board_point.head<2>() - hit);
}

// Pinhole derivative of the pixel with respect to board-plane (x, y).
Eigen::Matrix2d BoardToPixelJacobian(const CameraIntrinsics& intrinsics,
                                     const Pose& pose,
                                     const Eigen::Vector3d& board_point) {
  const Eigen::Vector3d x = pose.Apply(board_point);
  Eigen::Matrix<double, 2, 3> projection;
  projection << intrinsics.focal_length_x / x.z(), 0.0,
      -intrinsics.focal_length_x * x.x() / (x.z() * x.z()), 0.0,
      intrinsics.focal_length_y / x.z(),
      -intrinsics.focal_length_y * x.y() / (x.z() * x.z());
  return projection * pose.rotation.leftCols<2>();
}

Pose ApplyIncrement(const Pose& pose, const Eigen::Matrix<double, 6, 1>& step) {
  Pose updated;
  updated.rotation = AngleAxisToRotation(step.head<3>()) * pose.rotation;
  updated.translation = pose.translation + step.tail<3>();
  return updated;
}

void CheckProblem(const CalibrationProblem& problem) {
  problem.observations.Validate();
  if (problem.observations.images.empty()) {
    Throw(ErrorCode::kInsufficientCorrespondences, "no calibration images");
  }
  if (problem.initial_poses.size() != problem.observations.images.size()) {
    Throw(ErrorCode::kLengthMismatch, "one initial pose per image is required");
  }
  problem.rig_template.intrinsics.Validate();
  problem.rig_template.media.Validate();
  problem.rig_template.dome.Validate();
  if (!(problem.initial_v_off.norm() < problem.rig_template.dome.inner_radius)) {
    Throw(ErrorCode::kInvalidArgument, "initial v_off must lie inside the dome");
  }
}

// Per-image normal-equation blocks.
struct ImageBlocks {
  Eigen::Matrix3d u = Eigen::Matrix3d::Zero();
  Eigen::Matrix<double, 6, 6> v = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 3, 6> w = Eigen::Matrix<double, 3, 6>::Zero();
  Eigen::Vector3d g_voff = Eigen::Vector3d::Zero();
  Eigen::Matrix<double, 6, 1> g_pose = Eigen::Matrix<double, 6, 1>::Zero();
  double energy = 0.0;
  bool ok = true;
};

class Solver {
 public:
  Solver(const CalibrationProblem& problem, const CalibrationOptions& options)
      : problem_(problem), options_(options) {
    rig_ = problem.rig_template;
    const ObservationSet& observations = problem.observations;
    active_.resize(observations.images.size());
    for (size_t i = 0; i < observations.images.size(); ++i) {
      const ImageObservation& image = observations.images[i];
      for (size_t k = 0; k < image.corners_px.size(); ++k) {
        const bool ok =
            ResidualOrNothing(rig_, image.corners_px[k],
                              observations.board.Corner(static_cast<int>(k)),
                              problem.initial_v_off, problem.initial_poses[i])
                .has_value();
        if (ok) {
          active_[i].push_back(static_cast<int>(k));
        } else {
          ++dropped_;
        }
      }
    }
    weights_.resize(observations.images.size());
    for (size_t i = 0; i < observations.images.size(); ++i) {
      for (int k : active_[i]) {
        weights_[i].push_back(
            options.residual_metric == ResidualMetric::kImageScaled
                ? BoardToPixelJacobian(rig_.intrinsics, problem.initial_poses[i],
                                       observations.board.Corner(k))
                : Eigen::Matrix2d::Identity());
      }
    }
  }

  int dropped() const { return dropped_; }
  int residual_corners() const {
    int count = 0;
    for (const auto& corners : active_) count += static_cast<int>(corners.size());
    return count;
  }

  double Energy(const Eigen::Vector3d& v_off,
                const std::vector<Pose>& poses) const {
    std::vector<double> per_image(poses.size(), 0.0);
    ParallelFor(static_cast<int>(poses.size()), options_.threads, [&](int i) {
      const ImageObservation& image = problem_.observations.images[i];
      double sum = 0.0;
      for (size_t a = 0; a < active_[i].size(); ++a) {
        const int k = active_[i][a];
        const std::optional<Eigen::Vector2d> residual = ResidualOrNothing(
            rig_, image.corners_px[k], problem_.observations.board.Corner(k),
            v_off, poses[i]);
        if (!residual) {
          sum = std::numeric_limits<double>::infinity();
          break;
        }
        sum += (weights_[i][a] * *residual).squaredNorm();
      }
      per_image[i] = sum;
    });
    double total = 0.0;
    for (double value : per_image) total += value;
    return total;
  }

  std::vector<ImageBlocks> Linearize(const Eigen::Vector3d& v_off,
                                     const std::vector<Pose>& poses) const {
    std::vector<ImageBlocks> blocks(poses.size());
    ParallelFor(static_cast<int>(poses.size()), options_.threads, [&](int i) {
      const ImageObservation& image = problem_.observations.images[i];
      ImageBlocks& block = blocks[i];
      for (size_t a = 0; a < active_[i].size(); ++a) {
        const int k = active_[i][a];
        CornerLinearization lin;
        if (domeport::Linearize(rig_, image.corners_px[k],
                                problem_.observations.board.Corner(k), v_off,
                                poses[i], &lin) != HitStatus::kOk) {
          block.ok = false;
          return;
        }
        const Eigen::Matrix2d& weight = weights_[i][a];
        lin.residual = weight * lin.residual;
        lin.j_voff = weight * lin.j_voff;
        lin.j_pose = weight * lin.j_pose;
        block.u += lin.j_voff.transpose() * lin.j_voff;
        block.v += lin.j_pose.transpose() * lin.j_pose;
        block.w += lin.j_voff.transpose() * lin.j_pose;
        block.g_voff += lin.j_voff.transpose() * lin.residual;
        block.g_pose += lin.j_pose.transpose() * lin.residual;
        block.energy += lin.residual.squaredNorm();
      }
    });
    return blocks;
  }

  CalibrationResult Run() {
    CalibrationResult result;
    result.dropped_corners = dropped_;
    result.residual_corners = residual_corners();
    if (dropped_ > 0) {
      result.warnings.push_back(std::to_string(dropped_) +
                                " corners dropped: water ray parallel to board");
    }
    if (problem_.observations.images.size() < 2) {
      result.warnings.push_back("single image: v_off is under-constrained");
    }
    const int m = static_cast<int>(problem_.initial_poses.size());
    const int parameters = problem_.parameter_count();
    if (2 * result.residual_corners < parameters) {
      Throw(ErrorCode::kInsufficientCorrespondences,
            "fewer residuals than calibration parameters");
    }

    Eigen::Vector3d v_off = problem_.initial_v_off;
    std::vector<Pose> poses = problem_.initial_poses;
    double energy = Energy(v_off, poses);
    result.initial_energy = energy;
    result.energy_history.push_back(energy);
    double lambda = options_.initial_lambda;
    const double radius = rig_.dome.inner_radius;
    bool warned_outside = false;

    std::vector<ImageBlocks> blocks = Linearize(v_off, poses);
    int iteration = 0;
    for (; iteration < options_.max_iterations; ++iteration) {
      Eigen::VectorXd gradient(parameters);
      gradient.head<3>().setZero();
      for (int i = 0; i < m; ++i) {
        gradient.head<3>() += blocks[i].g_voff;
        gradient.segment<6>(3 + 6 * i) = blocks[i].g_pose;
      }
      if (gradient.lpNorm<Eigen::Infinity>() < options_.gradient_tolerance) {
        result.converged = true;
        result.termination = "gradient norm below tolerance";
        break;
      }

      bool accepted = false;
      double candidate_energy = energy;
      Eigen::Vector3d candidate_v_off;
      std::vector<Pose> candidate_poses(m);
      while (lambda < 1e16) {
        Eigen::Matrix3d schur = Eigen::Matrix3d::Zero();
        Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
        std::vector<Eigen::Matrix<double, 6, 6>> v_inverse(m);
        for (int i = 0; i < m; ++i) {
          schur += blocks[i].u;
          rhs -= blocks[i].g_voff;
        }
        schur.diagonal() *= 1.0 + lambda;
        bool solvable = true;
        for (int i = 0; i < m; ++i) {
          Eigen::Matrix<double, 6, 6> damped = blocks[i].v;
          damped.diagonal() *= 1.0 + lambda;
          Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(damped);
          if (ldlt.info() != Eigen::Success) {
            solvable = false;
            break;
          }
          v_inverse[i] =
              ldlt.solve(Eigen::Matrix<double, 6, 6>::Identity());
          schur -= blocks[i].w * v_inverse[i] * blocks[i].w.transpose();
          rhs += blocks[i].w * v_inverse[i] * blocks[i].g_pose;
        }
        if (!solvable) {
          lambda *= 10.0;
          continue;
        }
        const Eigen::Vector3d step_v_off = schur.ldlt().solve(rhs);
        candidate_v_off = v_off + step_v_off;
        for (int i = 0; i < m; ++i) {
          const Eigen::Matrix<double, 6, 1> step_pose =
              v_inverse[i] *
              (-blocks[i].g_pose - blocks[i].w.transpose() * step_v_off);
          candidate_poses[i] = ApplyIncrement(poses[i], step_pose);
        }
        if (candidate_v_off.norm() >= radius) {
          candidate_v_off *= 0.95 * radius / candidate_v_off.norm();
          if (!warned_outside) {
            result.warnings.push_back(
                "v_off left the dome during iteration; projected back inside");
            warned_outside = true;
          }
        }
        candidate_energy = Energy(candidate_v_off, candidate_poses);
        if (std::isfinite(candidate_energy) && candidate_energy < energy) {
          accepted = true;
          break;
        }
        lambda *= 10.0;
      }
      if (!accepted) {
        result.converged = true;
        result.termination = "no further decrease";
        break;
      }
      const double decrease = (energy - candidate_energy) / energy;
      v_off = candidate_v_off;
      poses = candidate_poses;
      energy = candidate_energy;
      result.energy_history.push_back(energy);
      lambda = std::max(lambda / 3.0, 1e-15);
      blocks = Linearize(v_off, poses);
      if (decrease < options_.relative_decrease_tolerance) {
        result.converged = true;
        result.termination = "relative energy decrease below tolerance";
        ++iteration;
        break;
      }
    }
    if (!result.converged) {
      result.termination = "maximum iterations reached";
      result.warnings.push_back("calibration did not converge in " +
                                std::to_string(options_.max_iterations) +
                                " iterations");
    }

    result.iterations = iteration;
    result.v_off = v_off;
    result.poses = poses;
    result.final_energy = energy;
    result.rms_board_residual = std::sqrt(
        CalibrationEnergy(problem_, v_off, poses) /
        std::max(1, result.residual_corners));

    // Gauss-Newton covariance of v_off from the undamped Schur complement.
    Eigen::Matrix3d schur = Eigen::Matrix3d::Zero();
    bool ok = true;
    for (int i = 0; i < m; ++i) {
      if (!blocks[i].ok) ok = false;
      schur += blocks[i].u;
      Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(blocks[i].v);
      if (!lu.isInvertible()) {
        ok = false;
        continue;
      }
      schur -= blocks[i].w * lu.inverse() * blocks[i].w.transpose();
    }
    const int dof = 2 * result.residual_corners - parameters;
    const double sigma2 = energy / std::max(1, dof);
    if (ok) {
      Eigen::Matrix3d covariance =
          sigma2 * schur.completeOrthogonalDecomposition().pseudoInverse();
      result.covariance_voff = 0.5 * (covariance + covariance.transpose());
    }

    CameraRig final_rig = rig_;
    final_rig.v_off = v_off;
    result.rms_reproj_px =
        ReprojectionRms(problem_.observations, final_rig, poses);
    return result;
  }

 private:
  const CalibrationProblem& problem_;
  CalibrationOptions options_;
  CameraRig rig_;
  std::vector<std::vector<int>> active_;
  std::vector<std::vector<Eigen::Matrix2d>> weights_;
  int dropped_ = 0;
};

// Corners of an image in the board frame, per corner index.
Eigen::Vector3d WorldPoint(const CameraRig& rig, const Pose& pose,
                           const Eigen::Vector3d& board_point) {
  return rig.rotation.transpose() * pose.Apply(board_point) + rig.v_off;
}

}  // namespace

Eigen::Vector2d BoardResidual(const Eigen::Vector2d& corner_px,
                              const Eigen::Vector3d& board_point,
                              const Eigen::Vector3d& v_off, const Pose& pose,
                              const CameraRig& rig_template) {
  Eigen::Vector2d hit;
  switch (BoardHit<double>(rig_template, corner_px, v_off, pose.rotation,
                           pose.translation, &hit)) {
    case HitStatus::kOk:
      break;
    case HitStatus::kTraceFailed:
      Throw(ErrorCode::kNoIntersection, "corner ray cannot be traced");
    case HitStatus::kParallel:
      Throw(ErrorCode::kRayParallelToBoard,
            "water ray is parallel to the board plane");
  }
  return board_point.head<2>() - hit;
}

Eigen::Matrix<double, 2, 9> BoardResidualJacobian(
    const Eigen::Vector2d& corner_px, const Eigen::Vector3d& board_point,
    const Eigen::Vector3d& v_off, const Pose& pose,
    const CameraRig& rig_template) {
  CornerLinearization lin;
  if (Linearize(rig_template, corner_px, board_point, v_off, pose, &lin) !=
      HitStatus::kOk) {
    Throw(ErrorCode::kRayParallelToBoard, "residual undefined for this corner");
  }
  Eigen::Matrix<double, 2, 9> jacobian;
  jacobian << lin.j_voff, lin.j_pose;
  return jacobian;
}

std::vector<Pose> InitPoses(const ObservationSet& observations,
                            const CameraIntrinsics& intrinsics) {
  const std::vector<Eigen::Vector2d> board_points =
      BoardPlanePoints(observations.board);
  std::vector<Pose> poses;
  for (const ImageObservation& image : observations.images) {
    if (image.corners_px.size() < 4) {
      Throw(ErrorCode::kInsufficientCorrespondences,
            "pose initialization needs at least 4 corners");
    }
    const HomographyEstimate h =
        EstimateHomography(board_points, image.corners_px);
    poses.push_back(PoseFromHomography(h.H, intrinsics));
  }
  return poses;
}

DecenteringInitialization InitialDecentering(
    const ObservationSet& observations, const CameraRig& rig_template,
    double magnitude_fraction) {
  DecenteringInitialization init;
  DirectSolverOptions options;
  options.image_diagonal_px = rig_template.intrinsics.Diagonal();
  for (const ImageObservation& image : observations.images) {
    init.estimates.push_back(
        EstimateCenter(image, observations.board, options));
  }
  CombinedCenter combined;
  try {
    combined = CombineCenters(init.estimates, observations.images,
                              observations.board);
  } catch (const Error& error) {
    if (error.code() != ErrorCode::kAllDegenerate) throw;
    return init;
  }
  init.refraction_center_px = combined.refraction_center_px;

  // Pool the convexity votes of every image against the shared centre.
  SignResult pooled;
  for (const ImageObservation& image : observations.images) {
    const SignResult single =
        ConvexitySign(image, observations.board, combined.refraction_center_px);
    pooled.positive_votes += single.positive_votes;
    pooled.negative_votes += single.negative_votes;
    pooled.excluded += single.excluded;
  }
  const int counted = pooled.positive_votes + pooled.negative_votes;
  Eigen::Vector3d r = combined.refraction_center_px;
  const bool negative = pooled.negative_votes >= pooled.positive_votes;
  pooled.oriented_center = negative ? r : Eigen::Vector3d(-r);
  if (counted > 0) {
    pooled.vote_fraction =
        static_cast<double>(std::max(pooled.positive_votes,
                                     pooled.negative_votes)) /
        counted;
    pooled.sign = pooled.vote_fraction - 0.5 < 1.0 / std::sqrt(counted)
                      ? DecenteringSign::kUndetermined
                  : negative ? DecenteringSign::kBackward
                             : DecenteringSign::kForward;
  }
  init.sign = pooled;
  init.v_off = magnitude_fraction * rig_template.dome.inner_radius *
               DecenteringDirection(pooled.oriented_center,
                                    rig_template.intrinsics,
                                    rig_template.rotation);
  init.usable = true;
  return init;
}

CalibrationResult Calibrate(const CalibrationProblem& problem,
                            const CalibrationOptions& options) {
  CheckProblem(problem);
  Solver solver(problem, options);
  return solver.Run();
}

Eigen::VectorXd StackedResiduals(const CalibrationProblem& problem,
                                 const Eigen::Vector3d& v_off,
                                 const std::vector<Pose>& poses) {
  const ObservationSet& observations = problem.observations;
  const int corners = observations.board.corner_count();
  Eigen::VectorXd residuals =
      Eigen::VectorXd::Zero(2 * corners * observations.images.size());
  for (size_t i = 0; i < observations.images.size(); ++i) {
    for (int k = 0; k < corners; ++k) {
      const std::optional<Eigen::Vector2d> residual = ResidualOrNothing(
          problem.rig_template, observations.images[i].corners_px[k],
          observations.board.Corner(k), v_off, poses[i]);
      if (residual) residuals.segment<2>(2 * (i * corners + k)) = *residual;
    }
  }
  return residuals;
}

Eigen::MatrixXd StackedJacobian(const CalibrationProblem& problem,
                                const Eigen::Vector3d& v_off,
                                const std::vector<Pose>& poses) {
  const ObservationSet& observations = problem.observations;
  const int corners = observations.board.corner_count();
  Eigen::MatrixXd jacobian = Eigen::MatrixXd::Zero(
      2 * corners * observations.images.size(), problem.parameter_count());
  for (size_t i = 0; i < observations.images.size(); ++i) {
    for (int k = 0; k < corners; ++k) {
      CornerLinearization lin;
      if (Linearize(problem.rig_template, observations.images[i].corners_px[k],
                    observations.board.Corner(k), v_off, poses[i],
                    &lin) != HitStatus::kOk) {
        continue;
      }
      const Eigen::Index row = 2 * (i * corners + k);
      jacobian.block<2, 3>(row, 0) = lin.j_voff;
      jacobian.block<2, 6>(row, 3 + 6 * i) = lin.j_pose;
    }
  }
  return jacobian;
}

double CalibrationEnergy(const CalibrationProblem& problem,
                         const Eigen::Vector3d& v_off,
                         const std::vector<Pose>& poses) {
  return StackedResiduals(problem, v_off, poses).squaredNorm();
}

double ReprojectionRms(const ObservationSet& observations, const CameraRig& rig,
                       const std::vector<Pose>& poses) {
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < observations.images.size(); ++i) {
    const ImageObservation& image = observations.images[i];
    for (size_t k = 0; k < image.corners_px.size(); ++k) {
      const Eigen::Vector3d world = WorldPoint(
          rig, poses[i], observations.board.Corner(static_cast<int>(k)));
      try {
        sum += (Project(rig, world).pixel - image.corners_px[k]).squaredNorm();
        ++count;
      } catch (const Error&) {
        // Unprojectable corners are left out of the RMS.
      }
    }
  }
  return count > 0 ? std::sqrt(sum / count) : 0.0;
}

PoseErrorReport PoseError(const std::vector<Pose>& estimated,
                          const std::vector<Pose>& ground_truth) {
  if (estimated.size() != ground_truth.size()) {
    Throw(ErrorCode::kLengthMismatch, "pose lists differ in length");
  }
  PoseErrorReport report;
  if (estimated.empty()) return report;
  double squared = 0.0;
  double angles = 0.0;
  for (size_t i = 0; i < estimated.size(); ++i) {
    const Pose relative = estimated[i].Inverse() * ground_truth[i];
    squared += relative.translation.squaredNorm();
    angles += RotationAngle(relative.rotation);
  }
  const double n = static_cast<double>(estimated.size());
  report.ate_trans = std::sqrt(squared / n);
  report.rotation_angle_error_mean = angles / n;
  return report;
}

Pose EstimateBoardPose(const CameraRig& rig, const ChessboardSpec& board,
                       const ImageObservation& image,
                       const std::vector<int>& corner_indices) {
  if (corner_indices.size() < 4) {
    Throw(ErrorCode::kInsufficientCorrespondences,
          "board pose needs at least 4 corners");
  }
  std::vector<Eigen::Vector2d> src;
  std::vector<Eigen::Vector2d> dst;
  for (int k : corner_indices) {
    src.push_back(board.Corner(k).head<2>());
    dst.push_back(image.corners_px[k]);
  }
  Pose pose = PoseFromHomography(EstimateHomography(src, dst).H, rig.intrinsics);

  auto energy = [&](const Pose& candidate) {
    double sum = 0.0;
    for (int k : corner_indices) {
      const std::optional<Eigen::Vector2d> residual = ResidualOrNothing(
          rig, image.corners_px[k], board.Corner(k), rig.v_off, candidate);
      if (!residual) return std::numeric_limits<double>::infinity();
      sum += residual->squaredNorm();
    }
    return sum;
  };
  double cost = energy(pose);
  double lambda = 1e-6;
  for (int iteration = 0; iteration < 100 && std::isfinite(cost); ++iteration) {
    Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> gradient = Eigen::Matrix<double, 6, 1>::Zero();
    for (int k : corner_indices) {
      CornerLinearization lin;
      if (Linearize(rig, image.corners_px[k], board.Corner(k), rig.v_off, pose,
                    &lin) != HitStatus::kOk) {
        continue;
      }
      jtj += lin.j_pose.transpose() * lin.j_pose;
      gradient += lin.j_pose.transpose() * lin.residual;
    }
    if (gradient.lpNorm<Eigen::Infinity>() < 1e-14) break;
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::Matrix<double, 6, 6> damped = jtj;
      damped.diagonal() *= 1.0 + lambda;
      const Eigen::Matrix<double, 6, 1> step = damped.ldlt().solve(-gradient);
      const Pose candidate = ApplyIncrement(pose, step);
      const double candidate_cost = energy(candidate);
      if (candidate_cost < cost) {
        const double decrease = (cost - candidate_cost) / cost;
        pose = candidate;
        cost = candidate_cost;
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = decrease >= 1e-12;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  return pose;
}

HoldoutReport ValidateHoldout(const CameraRig& calibrated_rig,
                              const ObservationSet& holdout, HoldoutMode mode) {
  holdout.Validate();
  const ChessboardSpec& board = holdout.board;
  const std::vector<int> outer = {
      board.Index(0, 0), board.Index(board.cols - 1, 0),
      board.Index(0, board.rows - 1),
      board.Index(board.cols - 1, board.rows - 1)};
  std::vector<int> all(board.corner_count());
  for (int k = 0; k < board.corner_count(); ++k) all[k] = k;

  HoldoutReport report;
  double total = 0.0;
  for (const ImageObservation& image : holdout.images) {
    const std::vector<int>& fit = mode == HoldoutMode::kOuterFour ? outer : all;
    const Pose pose = EstimateBoardPose(calibrated_rig, board, image, fit);
    double image_sum = 0.0;
    int image_count = 0;
    for (int k : all) {
      if (mode == HoldoutMode::kOuterFour &&
          std::find(outer.begin(), outer.end(), k) != outer.end()) {
        continue;
      }
      const Eigen::Vector3d world =
          WorldPoint(calibrated_rig, pose, board.Corner(k));
      image_sum +=
          (Project(calibrated_rig, world).pixel - image.corners_px[k]).norm();
      ++image_count;
    }
    report.per_image_mean_px.push_back(image_sum / std::max(1, image_count));
    total += image_sum;
    report.scored_corners += image_count;
  }
  report.mean_error_px = total / std::max(1, report.scored_corners);
  return report;
}

}  // namespace domeport

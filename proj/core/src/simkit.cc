#include "domeport/simkit.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "domeport/calibration.h"
#include "domeport/direct_solver.h"
#include "domeport/error.h"
#include "domeport/geometry.h"
#include "domeport/parallel.h"
#include "domeport/projection.h"

namespace domeport {
namespace {

constexpr uint64_t kPoseStreamOffset = 0;
constexpr uint64_t kSweepPoseStream = 0x5eed0001;
constexpr uint64_t kSweepNoiseStream = 0x5eed0002;

double Median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double median = values[mid];
  if (values.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(values.begin(),
                                               values.begin() + mid));
  }
  return median;
}

void MeanStd(const std::vector<double>& values, double* mean, double* std) {
  *mean = 0.0;
  *std = 0.0;
  if (values.empty()) return;
  for (double v : values) *mean += v;
  *mean /= static_cast<double>(values.size());
  if (values.size() < 2) return;
  for (double v : values) *std += (v - *mean) * (v - *mean);
  *std = std::sqrt(*std / static_cast<double>(values.size() - 1));
}

Eigen::Vector3d TrueCenter(const CameraRig& rig) {
  return rig.intrinsics.K() * rig.rotation * (-rig.v_off);
}

DecenteringSign TrueSign(const CameraRig& rig) {
  return (rig.rotation * (-rig.v_off)).z() > 0.0 ? DecenteringSign::kBackward
                                                 : DecenteringSign::kForward;
}

struct TrialOutcome {
  std::vector<double> center_errors;
  std::vector<double> axis_errors_deg;
  int estimates = 0;
  int signs_correct = 0;
  int degenerate = 0;
  int pooled_estimates = 0;
  bool pooled_sign_correct = false;
  double pooled_center_error = -1.0;
  bool calibrated = false;
  Eigen::Vector3d voff_error = Eigen::Vector3d::Zero();
  bool failed = false;
};

}  // namespace

Eigen::Vector3d BoardPointToWorld(const CameraRig& rig, const Pose& pose,
                                  const Eigen::Vector3d& board_point) {
  return rig.rotation.transpose() * pose.Apply(board_point) + rig.v_off;
}

std::vector<Eigen::Vector2d> ProjectBoard(const CameraRig& rig,
                                          const ChessboardSpec& board,
                                          const Pose& pose) {
  std::vector<Eigen::Vector2d> pixels;
  pixels.reserve(board.corner_count());
  for (int k = 0; k < board.corner_count(); ++k) {
    pixels.push_back(
        Project(rig, BoardPointToWorld(rig, pose, board.Corner(k))).pixel);
  }
  return pixels;
}

Pose SamplePose(const CameraRig& rig, const ChessboardSpec& board,
                const PoseSamplerConfig& sampler, Rng& rng) {
  const CameraIntrinsics& intrinsics = rig.intrinsics;
  for (int attempt = 0; attempt < sampler.max_attempts; ++attempt) {
    const Eigen::Vector2d pixel(rng.Uniform(0.0, intrinsics.width),
                                rng.Uniform(0.0, intrinsics.height));
    const double depth =
        rng.Uniform(sampler.min_distance_m, sampler.max_distance_m);
    const double tilt_x = rng.Uniform(-sampler.max_tilt_rad, sampler.max_tilt_rad);
    const double tilt_y = rng.Uniform(-sampler.max_tilt_rad, sampler.max_tilt_rad);
    const double spin = rng.Uniform(-std::numbers::pi, std::numbers::pi);

    Pose pose;
    pose.rotation =
        (Eigen::AngleAxisd(tilt_x, Eigen::Vector3d::UnitX()) *
         Eigen::AngleAxisd(tilt_y, Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(spin, Eigen::Vector3d::UnitZ()))
            .toRotationMatrix();
    const Eigen::Vector3d center_camera = depth * intrinsics.PixelToRay(pixel);
    pose.translation = center_camera - pose.rotation * board.Center();

    bool visible = true;
    for (int k = 0; k < board.corner_count() && visible; ++k) {
      const Eigen::Vector3d world =
          BoardPointToWorld(rig, pose, board.Corner(k));
      if (world.norm() <= std::max(rig.dome.outer_radius(), rig.dome.inner_radius) ||
          rig.WorldToCamera(world).z() <= 0.0) {
        visible = false;
        break;
      }
      try {
        visible = intrinsics.Contains(Project(rig, world).pixel,
                                      sampler.image_margin_px);
      } catch (const Error&) {
        visible = false;
      }
    }
    if (visible) return pose;
  }
  Throw(ErrorCode::kPoseSamplingExhausted,
        "no fully visible board pose after " +
            std::to_string(sampler.max_attempts) + " attempts");
}

std::vector<Pose> SamplePoses(const SimConfig& config) {
  std::vector<Pose> poses;
  for (int i = 0; i < config.n_images; ++i) {
    Rng rng(SplitSeed(config.rng_seed, kPoseStreamOffset + 2 * i));
    poses.push_back(SamplePose(config.rig, config.board, config.pose_sampler, rng));
  }
  return poses;
}

ObservationSet ObserveBoards(const CameraRig& rig, const ChessboardSpec& board,
                             const std::vector<Pose>& poses, double sigma_px,
                             uint64_t noise_seed) {
  if (!(sigma_px >= 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "noise sigma must be >= 0");
  }
  ObservationSet observations;
  observations.board = board;
  for (size_t i = 0; i < poses.size(); ++i) {
    ImageObservation image;
    image.id = "img" + std::to_string(i);
    image.corners_px = ProjectBoard(rig, board, poses[i]);
    if (sigma_px > 0.0) {
      Rng rng(SplitSeed(noise_seed, 2 * i + 1));
      for (Eigen::Vector2d& corner : image.corners_px) {
        corner.x() += sigma_px * rng.Normal();
        corner.y() += sigma_px * rng.Normal();
      }
    }
    observations.images.push_back(std::move(image));
  }
  return observations;
}

SimulatedData GenerateObservations(const SimConfig& config) {
  config.rig.intrinsics.Validate();
  config.rig.dome.Validate();
  config.rig.media.Validate();
  config.board.Validate();
  if (config.n_images < 1) {
    Throw(ErrorCode::kInvalidArgument, "n_images must be positive");
  }
  SimulatedData data;
  data.ground_truth.v_off = config.rig.v_off;
  data.ground_truth.poses = SamplePoses(config);
  data.observations =
      ObserveBoards(config.rig, config.board, data.ground_truth.poses,
                    config.noise_sigma_px, config.rng_seed);
  return data;
}

double CollinearityResidual(const DisplacementSample& sample,
                            const Eigen::Vector3d& refraction_center) {
  const Eigen::Vector3d line =
      sample.in_air_px.homogeneous().cross(refraction_center);
  const double norm = line.head<2>().norm();
  if (!(norm > 0.0)) return 0.0;
  const double distance =
      std::abs(line.dot(sample.refracted_px.homogeneous())) / norm;
  return distance / std::max(1.0, sample.arrow().norm());
}

DisplacementField ComputeDisplacementField(const CameraRig& rig, double depth,
                                           const GridSpec& grid) {
  if (!(depth > rig.dome.outer_radius() && depth > rig.dome.inner_radius)) {
    Throw(ErrorCode::kInvalidArgument,
          "depth must exceed the dome outer radius");
  }
  if (grid.columns < 1 || grid.rows < 1) {
    Throw(ErrorCode::kInvalidArgument, "grid needs at least one node");
  }
  DisplacementField field;
  field.scene_depth = depth;
  field.grid = grid;
  field.centered = rig.IsCentered();
  if (!field.centered) {
    field.refraction_center_px = ComputeRefractionAxis(rig).refraction_center_px;
  }
  const CameraIntrinsics& intrinsics = rig.intrinsics;
  const double usable_width = intrinsics.width - 2.0 * grid.margin_px;
  const double usable_height = intrinsics.height - 2.0 * grid.margin_px;
  for (int row = 0; row < grid.rows; ++row) {
    for (int column = 0; column < grid.columns; ++column) {
      DisplacementSample sample;
      sample.in_air_px = {
          grid.margin_px + usable_width * (column + 0.5) / grid.columns,
          grid.margin_px + usable_height * (row + 0.5) / grid.rows};
      const Eigen::Vector3d camera_point =
          depth * intrinsics.PixelToRay(sample.in_air_px);
      const Eigen::Vector3d world =
          rig.rotation.transpose() * camera_point + rig.v_off;
      try {
        sample.refracted_px = Project(rig, world).pixel;
      } catch (const Error&) {
        sample.valid = false;
        sample.refracted_px = sample.in_air_px;
      }
      field.samples.push_back(sample);
    }
  }
  return field;
}

double IncidenceForDeviation(double theta, double mu_in, double mu_out) {
  // sin(alpha - theta) = eta sin(alpha)  =>  tan(alpha) = sin / (cos - eta)
  const double eta = mu_in / mu_out;
  return std::atan2(std::sin(theta), std::cos(theta) - eta);
}

double MaxDeviation(const CameraRig& rig) {
  const double ratio = rig.v_off.norm() / rig.dome.inner_radius;
  const double mu_out = rig.dome.model == DomeModel::kThick ? rig.media.mu_glass
                                                            : rig.media.mu_water;
  return AngularDeviation(std::asin(std::min(1.0, ratio)), rig.media.mu_air,
                          mu_out);
}

IsoCurve IsoRefractionCurve(const CameraRig& rig, double theta,
                            int samples_per_cone) {
  if (!(theta >= 0.0) || samples_per_cone < 1) {
    Throw(ErrorCode::kInvalidArgument,
          "theta must be >= 0 with at least one sample");
  }
  IsoCurve curve;
  curve.theta = theta;
  if (rig.IsCentered()) {
    if (theta > 0.0) {
      Throw(ErrorCode::kThetaUnreachable,
            "a centred camera sees no refraction");
    }
    return curve;
  }
  const double max_deviation = MaxDeviation(rig);
  if (theta > max_deviation * (1.0 + 1e-12)) {
    Throw(ErrorCode::kThetaUnreachable,
          "theta exceeds the largest deviation of this rig");
  }
  const double mu_out = rig.dome.model == DomeModel::kThick ? rig.media.mu_glass
                                                            : rig.media.mu_water;
  curve.incidence = IncidenceForDeviation(theta, rig.media.mu_air, mu_out);
  const double d = rig.v_off.norm();
  const double sin_cone =
      std::min(1.0, rig.dome.inner_radius / d * std::sin(curve.incidence));
  curve.cone_angles = {std::asin(sin_cone),
                       std::numbers::pi - std::asin(sin_cone)};

  const Eigen::Vector3d toward_center = -rig.v_off / d;
  const Eigen::Vector3d helper = std::abs(toward_center.x()) < 0.9
                                     ? Eigen::Vector3d::UnitX()
                                     : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d e1 = toward_center.cross(helper).normalized();
  const Eigen::Vector3d e2 = toward_center.cross(e1);
  const int samples = theta == 0.0 ? 1 : samples_per_cone;
  for (int branch = 0; branch < 2; ++branch) {
    const double angle = curve.cone_angles[branch];
    for (int k = 0; k < samples; ++k) {
      const double tau = 2.0 * std::numbers::pi * k / samples;
      const Eigen::Vector3d direction =
          std::cos(angle) * toward_center +
          std::sin(angle) * (std::cos(tau) * e1 + std::sin(tau) * e2);
      const Eigen::Vector3d camera = rig.rotation * direction;
      if (camera.z() <= 1e-12) continue;
      const Eigen::Vector2d pixel = rig.intrinsics.CameraToPixel(camera);
      if (rig.intrinsics.Contains(pixel)) ++curve.inside_count;
      curve.branches[branch].push_back(pixel);
    }
  }
  return curve;
}

std::vector<NoiseSweepRow> RunNoiseSweep(const NoiseSweepConfig& config) {
  if (config.trials < 2) {
    Throw(ErrorCode::kInvalidArgument, "noise sweep needs at least 2 trials");
  }
  const CameraRig& rig = config.base.rig;
  const ChessboardSpec& board = config.base.board;
  const std::vector<Pose> base_poses =
      config.resample_poses ? std::vector<Pose>() : SamplePoses(config.base);
  const Eigen::Vector3d true_center = TrueCenter(rig);
  const bool center_finite =
      std::abs(true_center.z()) > 1e-12 * true_center.norm();
  const DecenteringSign true_sign = TrueSign(rig);
  const Eigen::Vector3d true_direction =
      rig.IsCentered() ? Eigen::Vector3d::Zero() : rig.v_off.normalized();

  DirectSolverOptions direct_options;
  direct_options.image_diagonal_px = rig.intrinsics.Diagonal();

  std::vector<NoiseSweepRow> rows;
  for (size_t s = 0; s < config.sigmas.size(); ++s) {
    const double sigma = config.sigmas[s];
    std::vector<TrialOutcome> outcomes(config.trials);
    ParallelFor(config.trials, config.threads, [&](int trial) {
      TrialOutcome& outcome = outcomes[trial];
      try {
        std::vector<Pose> poses = base_poses;
        if (config.resample_poses) {
          SimConfig trial_config = config.base;
          trial_config.rng_seed =
              SplitSeed(SplitSeed(config.base.rng_seed, kSweepPoseStream), trial);
          poses = SamplePoses(trial_config);
        }
        // Common random numbers: a trial reuses its noise pattern at every
        // sigma, scaled.
        const uint64_t noise_seed =
            SplitSeed(SplitSeed(config.base.rng_seed, kSweepNoiseStream), trial);
        const ObservationSet observations =
            ObserveBoards(rig, board, poses, sigma, noise_seed);
        for (const ImageObservation& image : observations.images) {
          const CenterEstimate estimate =
              EstimateCenter(image, board, direct_options);
          ++outcome.estimates;
          if (estimate.degenerate) ++outcome.degenerate;
          const Eigen::Vector3d r = estimate.refraction_center_px;
          if (center_finite && std::abs(r.z()) > 0.0) {
            outcome.center_errors.push_back(
                (r.hnormalized() - true_center.hnormalized()).norm());
          }
          const SignResult sign = ConvexitySign(image, board, r);
          if (sign.sign == true_sign) ++outcome.signs_correct;
          if (sign.sign != DecenteringSign::kUndetermined &&
              !rig.IsCentered()) {
            const Eigen::Vector3d direction = DecenteringDirection(
                sign.oriented_center, rig.intrinsics, rig.rotation);
            outcome.axis_errors_deg.push_back(
                std::acos(std::clamp(direction.dot(true_direction), -1.0, 1.0)) *
                180.0 / std::numbers::pi);
          }
        }
        CameraRig rig_template = rig;
        rig_template.v_off.setZero();
        const DecenteringInitialization init =
            InitialDecentering(observations, rig_template);
        if (init.usable) {
          ++outcome.pooled_estimates;
          if (init.sign.sign == true_sign) outcome.pooled_sign_correct = true;
          const Eigen::Vector3d r = init.refraction_center_px;
          if (center_finite && std::abs(r.z()) > 0.0) {
            outcome.pooled_center_error =
                (r.hnormalized() - true_center.hnormalized()).norm();
          }
        }
        if (config.run_calibration) {
          CalibrationProblem problem;
          problem.observations = observations;
          problem.rig_template = rig_template;
          problem.initial_v_off = init.v_off;
          problem.initial_poses = InitPoses(observations, rig.intrinsics);
          const CalibrationResult result = Calibrate(problem);
          outcome.calibrated = true;
          outcome.voff_error = result.v_off - rig.v_off;
        }
      } catch (const Error&) {
        outcome.failed = true;
      }
    });

    NoiseSweepRow row;
    row.sigma_px = sigma;
    row.trials = config.trials;
    std::vector<double> center_errors;
    std::vector<double> axis_errors;
    std::vector<double> voff_errors;
    std::vector<double> pooled_center_errors;
    int signs_correct = 0;
    int pooled_signs_correct = 0;
    int degenerate = 0;
    for (const TrialOutcome& outcome : outcomes) {
      if (outcome.failed) ++row.failures;
      row.pooled_estimates += outcome.pooled_estimates;
      if (outcome.pooled_sign_correct) ++pooled_signs_correct;
      if (outcome.pooled_center_error >= 0.0) {
        pooled_center_errors.push_back(outcome.pooled_center_error);
      }
      center_errors.insert(center_errors.end(), outcome.center_errors.begin(),
                           outcome.center_errors.end());
      axis_errors.insert(axis_errors.end(), outcome.axis_errors_deg.begin(),
                         outcome.axis_errors_deg.end());
      row.estimates += outcome.estimates;
      signs_correct += outcome.signs_correct;
      degenerate += outcome.degenerate;
      if (outcome.calibrated) {
        ++row.calibrations;
        for (int k = 0; k < 3; ++k) {
          voff_errors.push_back(1e3 * std::abs(outcome.voff_error(k)));
        }
      }
    }
    row.center_scatter_px = Median(center_errors);
    row.pooled_center_error_px = Median(pooled_center_errors);
    row.pooled_sign_correct_rate =
        static_cast<double>(pooled_signs_correct) / config.trials;
    MeanStd(axis_errors, &row.axis_angle_error_deg_mean,
            &row.axis_angle_error_deg_std);
    if (row.estimates > 0) {
      row.sign_correct_rate = static_cast<double>(signs_correct) / row.estimates;
      row.degenerate_rate = static_cast<double>(degenerate) / row.estimates;
    }
    MeanStd(voff_errors, &row.voff_error_mm_mean, &row.voff_error_mm_std);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace domeport

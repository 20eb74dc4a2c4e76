#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <gtest/gtest.h>

#include "domeport/calibration.h"
#include "domeport/error.h"
#include "domeport/geometry.h"
#include "domeport/projection.h"
#include "domeport/simkit.h"
#include "test_support.h"

namespace domeport {
namespace {

using testing::ReferenceRig;

const Eigen::Vector3d kVoff1(0.0, -0.002807, -0.013);
const Eigen::Vector3d kVoff2(-0.001, 0.001, 0.002);

SimConfig Config(const Eigen::Vector3d& v_off, double sigma, uint64_t seed) {
  SimConfig config;
  config.rig = ReferenceRig(v_off);
  config.noise_sigma_px = sigma;
  config.rng_seed = seed;
  return config;
}

void ExpectCode(ErrorCode code, const auto& function) {
  try {
    function();
    ADD_FAILURE() << "expected " << ErrorCodeName(code);
  } catch (const Error& error) {
    EXPECT_EQ(error.code(), code) << error.what();
  }
}

TEST(GenerateObservations, NoiselessCornersAreProjections) {
  const SimConfig config = Config(kVoff1, 0.0, 1);
  const SimulatedData data = GenerateObservations(config);
  ASSERT_EQ(data.observations.images.size(), 10u);
  EXPECT_EQ(data.ground_truth.v_off, kVoff1);
  for (size_t i = 0; i < data.observations.images.size(); ++i) {
    const std::vector<Eigen::Vector2d>& corners =
        data.observations.images[i].corners_px;
    ASSERT_EQ(corners.size(), 56u);
    for (int k = 0; k < 56; ++k) {
      const Eigen::Vector3d world = BoardPointToWorld(
          config.rig, data.ground_truth.poses[i], config.board.Corner(k));
      EXPECT_EQ(corners[k], Project(config.rig, world).pixel);
    }
  }
}

TEST(GenerateObservations, BoardsAreInsideTheImage) {
  const SimConfig config = Config(kVoff2, 0.0, 2);
  const SimulatedData data = GenerateObservations(config);
  for (const ImageObservation& image : data.observations.images) {
    for (const Eigen::Vector2d& corner : image.corners_px) {
      EXPECT_TRUE(config.rig.intrinsics.Contains(corner));
    }
  }
  for (const Pose& pose : data.ground_truth.poses) {
    const double depth = (pose.Apply(config.board.Center())).z();
    EXPECT_GE(depth, config.pose_sampler.min_distance_m - 1e-12);
    EXPECT_LE(depth, config.pose_sampler.max_distance_m + 1e-12);
  }
}

TEST(GenerateObservations, SeedDeterminesOutput) {
  const SimulatedData a = GenerateObservations(Config(kVoff1, 0.5, 42));
  const SimulatedData b = GenerateObservations(Config(kVoff1, 0.5, 42));
  const SimulatedData c = GenerateObservations(Config(kVoff1, 0.5, 43));
  ASSERT_EQ(a.observations.images.size(), b.observations.images.size());
  for (size_t i = 0; i < a.observations.images.size(); ++i) {
    EXPECT_EQ(a.observations.images[i].corners_px,
              b.observations.images[i].corners_px);
    EXPECT_EQ(a.ground_truth.poses[i].rotation, b.ground_truth.poses[i].rotation);
    EXPECT_EQ(a.ground_truth.poses[i].translation,
              b.ground_truth.poses[i].translation);
  }
  EXPECT_NE(a.observations.images[0].corners_px,
            c.observations.images[0].corners_px);
}

TEST(GenerateObservations, NoiseHasTheRequestedSpread) {
  SimConfig config = Config(kVoff2, 0.5, 7);
  config.n_images = 200;
  const SimulatedData noisy = GenerateObservations(config);
  config.noise_sigma_px = 0.0;
  const SimulatedData clean = GenerateObservations(config);
  double sum[2] = {0, 0};
  double sum_sq[2] = {0, 0};
  int count = 0;
  for (size_t i = 0; i < noisy.observations.images.size(); ++i) {
    for (size_t k = 0; k < 56; ++k) {
      const Eigen::Vector2d d = noisy.observations.images[i].corners_px[k] -
                                clean.observations.images[i].corners_px[k];
      for (int a = 0; a < 2; ++a) {
        sum[a] += d(a);
        sum_sq[a] += d(a) * d(a);
      }
      ++count;
    }
  }
  ASSERT_GE(count, 10000);
  for (int a = 0; a < 2; ++a) {
    const double mean = sum[a] / count;
    const double std = std::sqrt(sum_sq[a] / count - mean * mean);
    EXPECT_GE(std, 0.49);
    EXPECT_LE(std, 0.51);
    EXPECT_LT(std::abs(mean), 0.02);
  }
}

TEST(GenerateObservations, ImpossibleSamplerIsExhausted) {
  SimConfig config = Config(kVoff1, 0.0, 3);
  config.pose_sampler.min_distance_m = 0.06;
  config.pose_sampler.max_distance_m = 0.07;
  config.pose_sampler.max_attempts = 50;
  ExpectCode(ErrorCode::kPoseSamplingExhausted,
             [&] { GenerateObservations(config); });
  config = Config(kVoff1, -1.0, 3);
  ExpectCode(ErrorCode::kInvalidArgument, [&] { GenerateObservations(config); });
}

TEST(GenerateObservations, NoiselessDataRoundTripsThroughCalibration) {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Vector3d v_off =
        rng.Uniform(0.002, 0.015) * testing::RandomUnit(rng);
    const SimConfig config = Config(v_off, 0.0, 500 + trial);
    const SimulatedData data = GenerateObservations(config);
    CalibrationProblem problem;
    problem.observations = data.observations;
    problem.rig_template = config.rig;
    problem.rig_template.v_off.setZero();
    problem.initial_poses = InitPoses(data.observations, config.rig.intrinsics);
    problem.initial_v_off =
        InitialDecentering(data.observations, problem.rig_template).v_off;
    EXPECT_LT((Calibrate(problem).v_off - v_off).norm(), 1e-6);
  }
}

TEST(DisplacementField, CenteredRigHasNoArrows) {
  const DisplacementField field =
      ComputeDisplacementField(ReferenceRig(Eigen::Vector3d::Zero()), 1.0);
  EXPECT_TRUE(field.centered);
  ASSERT_EQ(field.samples.size(), 16u * 12u);
  for (const DisplacementSample& sample : field.samples) {
    EXPECT_TRUE(sample.valid);
    EXPECT_LT(sample.arrow().norm(), 1e-9);
  }
}

TEST(DisplacementField, BackwardDecenteringPointsInward) {
  // Camera behind the dome centre along the optical axis plus a lateral shift.
  const CameraRig rig = ReferenceRig({0.002, -0.001, -0.004});
  const DisplacementField field = ComputeDisplacementField(rig, 1.0);
  ASSERT_FALSE(field.centered);
  const Eigen::Vector2d r = field.refraction_center_px.hnormalized();
  for (const DisplacementSample& sample : field.samples) {
    ASSERT_TRUE(sample.valid);
    if ((sample.in_air_px - r).norm() < 1.0) continue;
    EXPECT_GT(sample.arrow().dot(r - sample.in_air_px), 0.0);
  }
}

TEST(DisplacementField, ForwardDecenteringPointsOutward) {
  const CameraRig rig = ReferenceRig({0.002, -0.001, 0.004});
  const DisplacementField field = ComputeDisplacementField(rig, 1.0);
  const Eigen::Vector2d r = field.refraction_center_px.hnormalized();
  for (const DisplacementSample& sample : field.samples) {
    ASSERT_TRUE(sample.valid);
    if ((sample.in_air_px - r).norm() < 1.0) continue;
    EXPECT_LT(sample.arrow().dot(r - sample.in_air_px), 0.0);
  }
}

TEST(DisplacementField, ArrowsAreCollinearWithTheRefractionCenter) {
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const CameraRig rig = testing::RandomRig(
        rng, trial % 2 == 0 ? DomeModel::kThick : DomeModel::kThin);
    const DisplacementField field =
        ComputeDisplacementField(rig, rng.Uniform(0.5, 5.0), {8, 6, 10.0});
    for (const DisplacementSample& sample : field.samples) {
      if (!sample.valid) continue;
      EXPECT_LT(CollinearityResidual(sample, field.refraction_center_px), 1e-8);
    }
  }
}

TEST(DisplacementField, DependsOnDepth) {
  const CameraRig rig = ReferenceRig(kVoff1);
  auto mean_length = [&](double depth) {
    double sum = 0.0;
    const DisplacementField field = ComputeDisplacementField(rig, depth);
    for (const DisplacementSample& sample : field.samples) {
      sum += sample.arrow().norm();
    }
    return sum / field.samples.size();
  };
  const double near = mean_length(1.0);
  const double far = mean_length(10.0);
  EXPECT_GT(std::abs(near - far), 1.0);
}

TEST(DisplacementField, RejectsDepthInsideDome) {
  ExpectCode(ErrorCode::kInvalidArgument,
             [] { ComputeDisplacementField(ReferenceRig(kVoff1), 0.05); });
}

TEST(IsoRefractionCurve, SamplesFitAConic) {
  Rng rng(16);
  int fitted = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const CameraRig rig = testing::RandomRig(
        rng, trial % 2 == 0 ? DomeModel::kThick : DomeModel::kThin);
    const double theta = rng.Uniform(0.05, 0.95) * MaxDeviation(rig);
    const IsoCurve curve = IsoRefractionCurve(rig, theta, 120);
    for (const std::vector<Eigen::Vector2d>& branch : curve.branches) {
      if (branch.size() < 50) continue;
      EXPECT_LT(testing::ConicFitResidual(branch), 1e-8);
      ++fitted;
    }
  }
  EXPECT_GT(fitted, 25);
}

TEST(IsoRefractionCurve, ConeRaysRefractByTheta) {
  const CameraRig rig = ReferenceRig(kVoff1);
  const double theta = 0.5 * MaxDeviation(rig);
  const IsoCurve curve = IsoRefractionCurve(rig, theta, 36);
  for (const std::vector<Eigen::Vector2d>& branch : curve.branches) {
    for (const Eigen::Vector2d& pixel : branch) {
      const LightPath path = BackProject(rig, pixel);
      const Eigen::Vector3d incident = path.air_segment.direction.normalized();
      const Eigen::Vector3d refracted =
          path.glass_segment->direction.normalized();
      EXPECT_NEAR(std::acos(std::clamp(incident.dot(refracted), -1.0, 1.0)),
                  theta, 1e-9);
    }
  }
}

TEST(IsoRefractionCurve, ZeroThetaIsTheRefractionCenter) {
  const CameraRig rig = ReferenceRig(kVoff1);
  const IsoCurve curve = IsoRefractionCurve(rig, 0.0);
  const Eigen::Vector2d r =
      ComputeRefractionAxis(rig).refraction_center_px.hnormalized();
  int points = 0;
  for (const std::vector<Eigen::Vector2d>& branch : curve.branches) {
    for (const Eigen::Vector2d& pixel : branch) {
      EXPECT_LT((pixel - r).norm(), 1e-6);
      ++points;
    }
  }
  EXPECT_EQ(points, 1);
  EXPECT_NEAR(curve.cone_angles[0], 0.0, 1e-12);
  EXPECT_NEAR(curve.cone_angles[1], testing::kPi, 1e-12);
}

TEST(IsoRefractionCurve, UnreachableTheta) {
  ExpectCode(ErrorCode::kThetaUnreachable, [] {
    IsoRefractionCurve(ReferenceRig(Eigen::Vector3d::Zero()), 0.01);
  });
  const CameraRig rig = ReferenceRig(kVoff1);
  ExpectCode(ErrorCode::kThetaUnreachable,
             [&] { IsoRefractionCurve(rig, 1.01 * MaxDeviation(rig)); });
  EXPECT_NO_THROW(IsoRefractionCurve(rig, MaxDeviation(rig)));
}

TEST(IncidenceForDeviation, InvertsAngularDeviation) {
  for (double alpha : {0.1, 0.4, 0.8, 1.2}) {
    const double theta = AngularDeviation(alpha, 1.0, 1.473);
    EXPECT_NEAR(IncidenceForDeviation(theta, 1.0, 1.473), alpha, 1e-12);
  }
}

NoiseSweepConfig SweepConfig(const Eigen::Vector3d& v_off,
                             std::vector<double> sigmas) {
  NoiseSweepConfig config;
  config.base = Config(v_off, 0.0, 2024);
  config.sigmas = std::move(sigmas);
  config.trials = 20;
  return config;
}

TEST(RunNoiseSweep, NoiselessRowHasZeroError) {
  NoiseSweepConfig config = SweepConfig(kVoff1, {0.0});
  config.trials = 3;
  config.run_calibration = true;
  const std::vector<NoiseSweepRow> rows = RunNoiseSweep(config);
  ASSERT_EQ(rows.size(), 1u);
  const NoiseSweepRow& row = rows[0];
  EXPECT_EQ(row.failures, 0);
  EXPECT_EQ(row.estimates, 30);
  EXPECT_LT(row.center_scatter_px, 1e-3);
  EXPECT_LT(row.pooled_center_error_px, 1e-3);
  EXPECT_LT(row.axis_angle_error_deg_mean, 1e-4);
  EXPECT_EQ(row.sign_correct_rate, 1.0);
  EXPECT_EQ(row.pooled_sign_correct_rate, 1.0);
  EXPECT_EQ(row.degenerate_rate, 0.0);
  EXPECT_EQ(row.calibrations, 3);
  EXPECT_LT(row.voff_error_mm_mean, 1e-3);
}

TEST(RunNoiseSweep, ErrorsGrowWithNoise) {
  const std::vector<NoiseSweepRow> rows =
      RunNoiseSweep(SweepConfig(kVoff2, {0.0, 0.2, 0.5, 1.0, 1.5}));
  for (size_t s = 1; s < rows.size(); ++s) {
    EXPECT_GE(rows[s].center_scatter_px, rows[s - 1].center_scatter_px)
        << "sigma " << rows[s].sigma_px;
  }
}

TEST(RunNoiseSweep, SignCorrectAtLowNoise) {
  const std::vector<NoiseSweepRow> rows =
      RunNoiseSweep(SweepConfig(kVoff2, {0.2}));
  EXPECT_GE(rows[0].pooled_sign_correct_rate, 0.9);
}

TEST(RunNoiseSweep, NeedsTwoTrials) {
  NoiseSweepConfig config = SweepConfig(kVoff2, {0.2});
  config.trials = 1;
  ExpectCode(ErrorCode::kInvalidArgument, [&] { RunNoiseSweep(config); });
}

}  // namespace
}  // namespace domeport

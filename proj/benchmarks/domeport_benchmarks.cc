#include <vector>

#include <Eigen/Core>
#include <benchmark/benchmark.h>

#include "domeport/calibration.h"
#include "domeport/direct_solver.h"
#include "domeport/geometry.h"
#include "domeport/projection.h"
#include "domeport/random.h"
#include "domeport/simkit.h"

namespace domeport {
namespace {

CameraRig Rig(DomeModel model) {
  CameraRig rig;
  rig.v_off = Eigen::Vector3d(0.0, -0.002807, -0.013);
  rig.dome.model = model;
  return rig;
}

std::vector<Eigen::Vector3d> ScenePoints(const CameraRig& rig, int count) {
  Rng rng(1);
  std::vector<Eigen::Vector3d> points;
  for (int i = 0; i < count; ++i) {
    const Eigen::Vector2d pixel(rng.Uniform(20, rig.intrinsics.width - 20),
                                rng.Uniform(20, rig.intrinsics.height - 20));
    points.push_back(BackProject(rig, pixel).water_segment.PointAt(rng.Uniform(0.5, 10)));
  }
  return points;
}

void BM_Project(benchmark::State& state, DomeModel model) {
  const CameraRig rig = Rig(model);
  const std::vector<Eigen::Vector3d> points = ScenePoints(rig, 256);
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(Project(rig, points[i++ % points.size()]));
  }
}
BENCHMARK_CAPTURE(BM_Project, thin, DomeModel::kThin);
BENCHMARK_CAPTURE(BM_Project, thick, DomeModel::kThick);

void BM_BackProject(benchmark::State& state) {
  const CameraRig rig = Rig(DomeModel::kThick);
  Rng rng(2);
  std::vector<Eigen::Vector2d> pixels;
  for (int i = 0; i < 256; ++i) {
    pixels.emplace_back(rng.Uniform(0, 2048), rng.Uniform(0, 1536));
  }
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(BackProject(rig, pixels[i++ % pixels.size()]));
  }
}
BENCHMARK(BM_BackProject);

SimulatedData Data(double sigma) {
  SimConfig config;
  config.rig = Rig(DomeModel::kThick);
  config.noise_sigma_px = sigma;
  config.rng_seed = 3;
  return GenerateObservations(config);
}

void BM_EstimateCenter(benchmark::State& state) {
  const SimulatedData data = Data(0.2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        EstimateCenter(data.observations.images[0], data.observations.board));
  }
}
BENCHMARK(BM_EstimateCenter);

void BM_Calibrate(benchmark::State& state) {
  const SimulatedData data = Data(0.2);
  CalibrationProblem problem;
  problem.observations = data.observations;
  problem.rig_template = Rig(DomeModel::kThick);
  problem.rig_template.v_off.setZero();
  problem.initial_poses = InitPoses(data.observations, problem.rig_template.intrinsics);
  problem.initial_v_off =
      InitialDecentering(data.observations, problem.rig_template).v_off;
  CalibrationOptions options;
  options.max_iterations = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(Calibrate(problem, options));
  }
}
BENCHMARK(BM_Calibrate)->Arg(1)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace domeport

BENCHMARK_MAIN();

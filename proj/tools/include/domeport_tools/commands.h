#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace domeport::tools {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNumericalFailure = 3;

struct CommonOptions {
  // Sidecar log with timestamps; outputs never carry timestamps.
  std::string log_path;
  int threads = 1;
};

struct SimulateOptions {
  std::string rig_path;
  std::string board_path;  // default 7 x 8 board, 0.05 m squares
  std::string out_dir;
  int images = 10;
  double sigma_px = 0.0;
  uint64_t seed = 1;
  double min_distance_m = 0.4;
  double max_distance_m = 2.0;
  double max_tilt_deg = 40.0;
};

struct EstimateCenterOptions {
  std::string observations_path;
  std::string board_path;
  std::string rig_path;
  std::string out_path;
  std::string svg_path;
};

struct CalibrateOptions {
  std::string observations_path;
  std::string board_path;
  std::string rig_path;
  std::string out_path;
  bool init_from_direct = false;
  int max_iterations = 100;
  std::string holdout_path;
  std::string holdout_mode = "outer4";
  std::string ground_truth_path;
  std::string residual = "image";
};

struct ValidateOptions {
  std::string observations_path;
  std::string board_path;
  std::string rig_path;
  std::string out_path;
  std::string mode = "outer4";
};

struct DisplacementFieldOptions {
  std::string rig_path;
  std::string out_dir;
  double depth_m = 1.0;
  int columns = 16;
  int rows = 12;
};

struct IsoCurvesOptions {
  std::string rig_path;
  std::string out_dir;
  std::vector<double> thetas_deg;
  int count = 5;  // used when no explicit thetas are given
  int samples = 360;
};

struct NoiseSweepOptions {
  std::string rig_path;
  std::string board_path;
  std::string out_dir;
  std::vector<double> sigmas = {0.0, 0.2, 0.5, 0.8, 1.0, 1.2, 1.5};
  int trials = 20;
  int images = 10;
  uint64_t seed = 1;
  double min_distance_m = 0.4;
  double max_distance_m = 2.0;
  double max_tilt_deg = 40.0;
  bool calibrate = false;
  bool resample_poses = false;
};

int RunSimulate(const SimulateOptions& options, const CommonOptions& common);
int RunEstimateCenter(const EstimateCenterOptions& options,
                      const CommonOptions& common);
int RunCalibrate(const CalibrateOptions& options, const CommonOptions& common);
int RunValidate(const ValidateOptions& options, const CommonOptions& common);
int RunDisplacementField(const DisplacementFieldOptions& options,
                         const CommonOptions& common);
int RunIsoCurves(const IsoCurvesOptions& options, const CommonOptions& common);
int RunNoiseSweep(const NoiseSweepOptions& options, const CommonOptions& common);

// Runs a command body, mapping library errors to exit codes and messages on
// stderr.
template <typename Body>
int Guarded(Body&& body);

}  // namespace domeport::tools

#include "domeport_tools/commands_inl.h"

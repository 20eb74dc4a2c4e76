#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "domeport/parallel.h"
#include "domeport/random.h"
#include "domeport/version.h"
#include "domeport_tools/commands.h"
#include "domeport_tools/files.h"

namespace {

using domeport::tools::CommonOptions;

void AddCommon(CLI::App* app, CommonOptions* common) {
  app->add_option("--log", common->log_path,
                  "Append timestamped progress messages to this file");
  app->add_option("--threads", common->threads,
                  "Worker threads (default from DOMEPORT_THREADS)")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  namespace tools = domeport::tools;
  CLI::App app{"Dome-port camera simulation and calibration"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print version and schema version");

  CommonOptions common;
  common.threads = domeport::DefaultThreadCount();

  tools::SimulateOptions simulate;
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Generate synthetic corner observations");
  simulate_cmd->add_option("--rig", simulate.rig_path, "Rig JSON with v_off_m")
      ->required();
  simulate_cmd->add_option("--board", simulate.board_path,
                           "Board JSON (default 7x8 corners, 0.05 m)");
  simulate_cmd->add_option("--out-dir", simulate.out_dir, "Output directory")
      ->required();
  simulate_cmd->add_option("--images", simulate.images, "Number of images");
  simulate_cmd->add_option("--sigma", simulate.sigma_px,
                           "Corner noise standard deviation [px]");
  simulate_cmd->add_option("--seed", simulate.seed, "RNG seed");
  simulate_cmd->add_option("--min-distance", simulate.min_distance_m,
                           "Nearest board distance [m]");
  simulate_cmd->add_option("--max-distance", simulate.max_distance_m,
                           "Farthest board distance [m]");
  simulate_cmd->add_option("--max-tilt", simulate.max_tilt_deg,
                           "Largest board tilt [deg]");
  AddCommon(simulate_cmd, &common);

  tools::EstimateCenterOptions estimate;
  CLI::App* estimate_cmd = app.add_subcommand(
      "estimate-center", "Direct refraction-centre and sign estimation");
  estimate_cmd->add_option("--observations", estimate.observations_path,
                           "Corner CSV")
      ->required();
  estimate_cmd->add_option("--board", estimate.board_path, "Board JSON")
      ->required();
  estimate_cmd->add_option("--rig", estimate.rig_path, "Rig JSON")->required();
  estimate_cmd->add_option("--out", estimate.out_path,
                           "Report JSON (stdout when omitted)");
  estimate_cmd->add_option("--svg", estimate.svg_path, "SVG overlay");
  AddCommon(estimate_cmd, &common);

  tools::CalibrateOptions calibrate;
  CLI::App* calibrate_cmd =
      app.add_subcommand("calibrate", "Calibrate the decentering vector");
  calibrate_cmd->add_option("--observations", calibrate.observations_path,
                            "Corner CSV")
      ->required();
  calibrate_cmd->add_option("--board", calibrate.board_path, "Board JSON")
      ->required();
  calibrate_cmd->add_option("--rig", calibrate.rig_path, "Rig JSON")
      ->required();
  calibrate_cmd->add_option("--out", calibrate.out_path,
                            "Report JSON (stdout when omitted)");
  calibrate_cmd->add_flag("--init-from-direct", calibrate.init_from_direct,
                          "Start from the direct solver instead of zero");
  calibrate_cmd->add_option("--max-iter", calibrate.max_iterations,
                            "Levenberg-Marquardt iteration limit");
  calibrate_cmd->add_option("--holdout", calibrate.holdout_path,
                            "Validation corner CSV");
  calibrate_cmd->add_option("--holdout-mode", calibrate.holdout_mode,
                            "outer4 or all")
      ->check(CLI::IsMember({"outer4", "all"}));
  calibrate_cmd->add_option("--ground-truth", calibrate.ground_truth_path,
                            "Ground-truth JSON from simulate");
  calibrate_cmd->add_option("--residual", calibrate.residual,
                            "Residual weighting: image or board")
      ->check(CLI::IsMember({"image", "board"}));
  AddCommon(calibrate_cmd, &common);

  tools::ValidateOptions validate;
  CLI::App* validate_cmd = app.add_subcommand(
      "validate", "Holdout reprojection error of a calibrated rig");
  validate_cmd->add_option("--observations", validate.observations_path,
                           "Corner CSV")
      ->required();
  validate_cmd->add_option("--board", validate.board_path, "Board JSON")
      ->required();
  validate_cmd->add_option("--rig", validate.rig_path,
                           "Calibrated rig JSON with v_off_m")
      ->required();
  validate_cmd->add_option("--out", validate.out_path,
                           "Report JSON (stdout when omitted)");
  validate_cmd->add_option("--mode", validate.mode, "outer4 or all")
      ->check(CLI::IsMember({"outer4", "all"}));
  AddCommon(validate_cmd, &common);

  tools::DisplacementFieldOptions field;
  CLI::App* field_cmd = app.add_subcommand(
      "displacement-field", "Refraction displacement arrows at a fixed depth");
  field_cmd->add_option("--rig", field.rig_path, "Rig JSON with v_off_m")
      ->required();
  field_cmd->add_option("--out-dir", field.out_dir, "Output directory")
      ->required();
  field_cmd->add_option("--depth", field.depth_m, "Scene depth [m]");
  field_cmd->add_option("--columns", field.columns, "Grid columns");
  field_cmd->add_option("--rows", field.rows, "Grid rows");
  AddCommon(field_cmd, &common);

  tools::IsoCurvesOptions iso;
  CLI::App* iso_cmd = app.add_subcommand(
      "iso-curves", "Image loci of equal refraction angle");
  iso_cmd->add_option("--rig", iso.rig_path, "Rig JSON with v_off_m")
      ->required();
  iso_cmd->add_option("--out-dir", iso.out_dir, "Output directory")
      ->required();
  iso_cmd->add_option("--theta", iso.thetas_deg,
                      "Refraction angles [deg] (repeatable)");
  iso_cmd->add_option("--count", iso.count,
                      "Evenly spaced angles when --theta is omitted");
  iso_cmd->add_option("--samples", iso.samples, "Samples per cone");
  AddCommon(iso_cmd, &common);

  tools::NoiseSweepOptions sweep;
  CLI::App* sweep_cmd = app.add_subcommand(
      "noise-sweep", "Monte-Carlo accuracy versus corner noise");
  sweep_cmd->add_option("--rig", sweep.rig_path, "Rig JSON with v_off_m")
      ->required();
  sweep_cmd->add_option("--board", sweep.board_path, "Board JSON");
  sweep_cmd->add_option("--out-dir", sweep.out_dir, "Output directory")
      ->required();
  sweep_cmd->add_option("--sigmas", sweep.sigmas, "Noise levels [px]")
      ->delimiter(',');
  sweep_cmd->add_option("--trials", sweep.trials, "Trials per noise level");
  sweep_cmd->add_option("--images", sweep.images, "Images per trial");
  sweep_cmd->add_option("--seed", sweep.seed, "RNG seed");
  sweep_cmd->add_option("--min-distance", sweep.min_distance_m,
                        "Nearest board distance [m]");
  sweep_cmd->add_option("--max-distance", sweep.max_distance_m,
                        "Farthest board distance [m]");
  sweep_cmd->add_option("--max-tilt", sweep.max_tilt_deg,
                        "Largest board tilt [deg]");
  sweep_cmd->add_flag("--calibrate", sweep.calibrate,
                      "Also run the full calibration per trial");
  sweep_cmd->add_flag("--resample-poses", sweep.resample_poses,
                      "Draw new board poses for every trial");
  AddCommon(sweep_cmd, &common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? tools::kExitOk : tools::kExitInputError;
  }

  if (show_version) {
    std::cout << "domeport " << domeport::kVersion << "\n"
              << "schema " << tools::kSchemaVersion << "\n"
              << "rng " << domeport::kRngAlgorithm << "\n";
    return tools::kExitOk;
  }
  if (*simulate_cmd) {
    return tools::Guarded([&] { return tools::RunSimulate(simulate, common); });
  }
  if (*estimate_cmd) {
    return tools::Guarded(
        [&] { return tools::RunEstimateCenter(estimate, common); });
  }
  if (*calibrate_cmd) {
    return tools::Guarded(
        [&] { return tools::RunCalibrate(calibrate, common); });
  }
  if (*validate_cmd) {
    return tools::Guarded([&] { return tools::RunValidate(validate, common); });
  }
  if (*field_cmd) {
    return tools::Guarded(
        [&] { return tools::RunDisplacementField(field, common); });
  }
  if (*iso_cmd) {
    return tools::Guarded([&] { return tools::RunIsoCurves(iso, common); });
  }
  if (*sweep_cmd) {
    return tools::Guarded([&] { return tools::RunNoiseSweep(sweep, common); });
  }
  std::cout << app.help();
  return tools::kExitInputError;
}

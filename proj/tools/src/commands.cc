#include "domeport_tools/commands.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "domeport/calibration.h"
#include "domeport/direct_solver.h"
#include "domeport/error.h"
#include "domeport/geometry.h"
#include "domeport/random.h"
#include "domeport/simkit.h"
#include "domeport/version.h"
#include "domeport_tools/files.h"
#include "domeport_tools/svg.h"

namespace domeport::tools {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Timestamped sidecar log. Disabled when no path is given.
class Logger {
 public:
  explicit Logger(const std::string& path) {
    if (!path.empty()) {
      stream_.open(path, std::ios::app);
      if (!stream_) Throw(ErrorCode::kIo, "cannot open log file " + path);
    }
  }

  void Info(const std::string& message) {
    if (!stream_.is_open()) return;
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &utc);
    stream_ << stamp << " " << message << "\n";
    stream_.flush();
  }

 private:
  std::ofstream stream_;
};

std::string Basename(const std::string& path) {
  return std::filesystem::path(path).filename().string();
}

void EnsureDirectory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) Throw(ErrorCode::kIo, "cannot create directory " + dir);
}

std::string JoinPath(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void WriteJson(const std::string& path, const Json& json) {
  WriteTextFile(path, json.dump(2) + "\n");
}

// Input file with its content hash, loaded once.
struct InputFile {
  std::string path;
  std::string contents;

  Json Describe() const {
    Json json;
    json["file"] = Basename(path);
    json["fnv1a64"] = Fnv1aHex(contents);
    return json;
  }
};

InputFile ReadInput(const std::string& path) {
  return {path, ReadTextFile(path)};
}

Json ReportHeader(const std::string& command) {
  Json json;
  json["tool"] = "domeport";
  json["version"] = kVersion;
  json["schema_version"] = kSchemaVersion;
  json["command"] = command;
  return json;
}

RigFile ParseRig(const InputFile& input) {
  return RigFromJson(ParseJson(input.contents, Basename(input.path)),
                     Basename(input.path));
}

ChessboardSpec ParseBoard(const InputFile& input) {
  return BoardFromJson(ParseJson(input.contents, Basename(input.path)),
                       Basename(input.path));
}

ObservationSet ParseObservations(const InputFile& input,
                                 const ChessboardSpec& board) {
  return ObservationsFromCsv(input.contents, board, Basename(input.path));
}

void RequireVOff(const RigFile& rig, const std::string& path) {
  if (!rig.has_v_off) {
    Throw(ErrorCode::kSchemaViolation,
          Basename(path) + ":/v_off_m: required by this command");
  }
}

HoldoutMode ParseHoldoutMode(const std::string& name) {
  if (name == "outer4") return HoldoutMode::kOuterFour;
  if (name == "all") return HoldoutMode::kAll;
  Throw(ErrorCode::kInvalidArgument,
        "unknown holdout mode '" + name + "' (expected outer4 or all)");
}

ResidualMetric ParseResidualMetric(const std::string& name) {
  if (name == "image") return ResidualMetric::kImageScaled;
  if (name == "board") return ResidualMetric::kBoardPlane;
  Throw(ErrorCode::kInvalidArgument,
        "unknown residual metric '" + name + "' (expected image or board)");
}

Json CenterJson(const Eigen::Vector3d& homogeneous) {
  Json json;
  json["homogeneous"] = Vector(homogeneous);
  if (std::abs(homogeneous.z()) > 1e-12 * homogeneous.norm()) {
    json["pixel"] = Vector(homogeneous.hnormalized());
  } else {
    json["pixel"] = nullptr;
  }
  return json;
}

Json SignJson(const SignResult& sign) {
  Json json;
  json["sign"] = DecenteringSignName(sign.sign);
  json["vote_fraction"] = sign.vote_fraction;
  json["positive_votes"] = sign.positive_votes;
  json["negative_votes"] = sign.negative_votes;
  json["excluded"] = sign.excluded;
  return json;
}

Json EstimateJson(const std::string& id, const CenterEstimate& estimate,
                  const SignResult& sign) {
  Json json;
  json["image_id"] = id;
  json["refraction_center_px"] = CenterJson(estimate.refraction_center_px);
  json["homography_mapping_error_px"] = estimate.homography_error_px;
  json["noise_px"] = estimate.noise_px;
  json["second_singular_ratio"] = estimate.second_singular_ratio;
  json["degeneracy_threshold"] = estimate.degeneracy_threshold;
  json["null_space_gap"] = estimate.null_space_gap;
  json["degenerate"] = estimate.degenerate;
  json["sign"] = SignJson(sign);
  return json;
}

// Image outline, detected corners and the displacement lines through r.
std::string CenterOverlay(const CameraIntrinsics& intrinsics,
                          const ObservationSet& observations,
                          const std::optional<Eigen::Vector3d>& center) {
  SvgCanvas canvas(intrinsics.width, intrinsics.height);
  canvas.Rect(0, 0, intrinsics.width, intrinsics.height, "black", "white");
  std::optional<Eigen::Vector2d> r;
  if (center && std::abs(center->z()) > 1e-12 * center->norm()) {
    r = center->hnormalized();
  }
  for (const ImageObservation& image : observations.images) {
    for (const Eigen::Vector2d& corner : image.corners_px) {
      if (r) canvas.Line(*r, corner, "#9ecae1", 0.3);
    }
    for (const Eigen::Vector2d& corner : image.corners_px) {
      canvas.Circle(corner, 1.5, "#08519c");
    }
  }
  if (r) {
    canvas.Circle(*r, 4.0, "#e31a1c");
    canvas.Text(*r + Eigen::Vector2d(12.0, -12.0), "r");
  }
  return canvas.str();
}

int CountOf(const ObservationSet& observations) {
  return static_cast<int>(observations.images.size());
}

}  // namespace

int RunSimulate(const SimulateOptions& options, const CommonOptions& common) {
  Logger log(common.log_path);
  const InputFile rig_input = ReadInput(options.rig_path);
  const RigFile rig = ParseRig(rig_input);
  RequireVOff(rig, options.rig_path);
  ChessboardSpec board;
  std::optional<InputFile> board_input;
  if (!options.board_path.empty()) {
    board_input = ReadInput(options.board_path);
    board = ParseBoard(*board_input);
  }
  if (options.images < 1) {
    Throw(ErrorCode::kInvalidArgument, "--images must be at least 1");
  }
  if (!(options.sigma_px >= 0.0)) {
    Throw(ErrorCode::kInvalidArgument, "--sigma must be non-negative");
  }
  if (!(options.min_distance_m > 0.0) ||
      !(options.max_distance_m >= options.min_distance_m)) {
    Throw(ErrorCode::kInvalidArgument, "invalid distance range");
  }
  SimConfig config;
  config.rig = rig.rig;
  config.board = board;
  config.n_images = options.images;
  config.noise_sigma_px = options.sigma_px;
  config.rng_seed = options.seed;
  config.pose_sampler.min_distance_m = options.min_distance_m;
  config.pose_sampler.max_distance_m = options.max_distance_m;
  config.pose_sampler.max_tilt_rad = options.max_tilt_deg * kDegToRad;
  log.Info("simulate: " + std::to_string(options.images) + " images, seed " +
           std::to_string(options.seed));
  const SimulatedData data = GenerateObservations(config);

  EnsureDirectory(options.out_dir);
  WriteTextFile(JoinPath(options.out_dir, "observations.csv"),
                ObservationsToCsv(data.observations));
  WriteJson(JoinPath(options.out_dir, "board.json"), BoardToJson(board));

  Json truth = ReportHeader("simulate");
  truth["inputs"]["rig"] = rig_input.Describe();
  if (board_input) truth["inputs"]["board"] = board_input->Describe();
  Json sim = GroundTruthToJson(data.ground_truth);
  for (auto it = sim.begin(); it != sim.end(); ++it) truth[it.key()] = it.value();
  truth["image_ids"] = Json::array();
  for (const ImageObservation& image : data.observations.images) {
    truth["image_ids"].push_back(image.id);
  }
  truth["noise_sigma_px"] = options.sigma_px;
  truth["rng"]["algorithm"] = kRngAlgorithm;
  truth["rng"]["seed"] = options.seed;
  truth["rng"]["pose_stream"] = "2i";
  truth["rng"]["noise_stream"] = "2i+1";
  Json& sampler = truth["pose_sampler"];
  sampler["model"] =
      "uniform pixel and depth for the board centre, uniform tilt about camera "
      "x and y, uniform in-plane spin, rejection on full visibility";
  sampler["min_distance_m"] = config.pose_sampler.min_distance_m;
  sampler["max_distance_m"] = config.pose_sampler.max_distance_m;
  sampler["max_tilt_deg"] = options.max_tilt_deg;
  sampler["max_attempts"] = config.pose_sampler.max_attempts;
  WriteJson(JoinPath(options.out_dir, "ground_truth.json"), truth);
  log.Info("simulate: wrote " + options.out_dir);
  std::cout << "simulated " << options.images << " images into "
            << options.out_dir << "\n";
  return kExitOk;
}

int RunEstimateCenter(const EstimateCenterOptions& options,
                      const CommonOptions& common) {
  Logger log(common.log_path);
  const InputFile rig_input = ReadInput(options.rig_path);
  const InputFile board_input = ReadInput(options.board_path);
  const InputFile obs_input = ReadInput(options.observations_path);
  const RigFile rig = ParseRig(rig_input);
  const ChessboardSpec board = ParseBoard(board_input);
  const ObservationSet observations = ParseObservations(obs_input, board);
  log.Info("estimate-center: " + std::to_string(CountOf(observations)) +
           " images");

  CameraRig rig_template = rig.rig;
  rig_template.v_off.setZero();
  const DecenteringInitialization init =
      InitialDecentering(observations, rig_template);

  Json report = ReportHeader("estimate-center");
  report["inputs"]["observations"] = obs_input.Describe();
  report["inputs"]["board"] = board_input.Describe();
  report["inputs"]["rig"] = rig_input.Describe();
  report["images"] = Json::array();
  int degenerate = 0;
  for (size_t i = 0; i < observations.images.size(); ++i) {
    const CenterEstimate& estimate = init.estimates[i];
    if (estimate.degenerate) ++degenerate;
    const SignResult sign = ConvexitySign(observations.images[i], board,
                                          estimate.refraction_center_px);
    report["images"].push_back(
        EstimateJson(observations.images[i].id, estimate, sign));
  }
  report["degenerate_images"] = degenerate;
  report["degenerate"] = !init.usable;
  if (init.usable) {
    report["refraction_center_px"] = CenterJson(init.refraction_center_px);
    report["sign"] = SignJson(init.sign);
    if (init.sign.sign != DecenteringSign::kUndetermined) {
      report["decentering_direction"] = Vector(DecenteringDirection(
          init.sign.oriented_center, rig_template.intrinsics,
          rig_template.rotation));
    } else {
      report["decentering_direction"] = nullptr;
    }
  } else {
    report["refraction_center_px"] = nullptr;
    report["sign"] = nullptr;
    report["decentering_direction"] = nullptr;
  }
  if (!options.out_path.empty()) WriteJson(options.out_path, report);
  if (!options.svg_path.empty()) {
    WriteTextFile(options.svg_path,
                  CenterOverlay(rig.rig.intrinsics, observations,
                                init.usable ? std::optional<Eigen::Vector3d>(
                                                  init.refraction_center_px)
                                            : std::nullopt));
  }
  if (options.out_path.empty()) std::cout << report.dump(2) << "\n";
  if (!init.usable) {
    std::cerr << "error [" << ErrorCodeName(ErrorCode::kAllDegenerate)
              << "]: every image is degenerate; refraction centre unobservable\n";
    log.Info("estimate-center: all images degenerate");
    return kExitNumericalFailure;
  }
  log.Info("estimate-center: done");
  return kExitOk;
}

int RunCalibrate(const CalibrateOptions& options, const CommonOptions& common) {
  Logger log(common.log_path);
  const InputFile rig_input = ReadInput(options.rig_path);
  const InputFile board_input = ReadInput(options.board_path);
  const InputFile obs_input = ReadInput(options.observations_path);
  const RigFile rig = ParseRig(rig_input);
  const ChessboardSpec board = ParseBoard(board_input);
  const ObservationSet observations = ParseObservations(obs_input, board);
  const ResidualMetric metric = ParseResidualMetric(options.residual);
  const HoldoutMode holdout_mode = ParseHoldoutMode(options.holdout_mode);
  if (options.max_iterations < 1) {
    Throw(ErrorCode::kInvalidArgument, "--max-iter must be at least 1");
  }
  std::optional<InputFile> holdout_input;
  std::optional<ObservationSet> holdout;
  if (!options.holdout_path.empty()) {
    holdout_input = ReadInput(options.holdout_path);
    holdout = ParseObservations(*holdout_input, board);
  }
  std::optional<InputFile> truth_input;
  std::optional<GroundTruth> truth;
  if (!options.ground_truth_path.empty()) {
    truth_input = ReadInput(options.ground_truth_path);
    truth = GroundTruthFromJson(
        ParseJson(truth_input->contents, Basename(truth_input->path)),
        Basename(truth_input->path));
    if (truth->poses.size() != observations.images.size()) {
      Throw(ErrorCode::kLengthMismatch,
            "ground truth has " + std::to_string(truth->poses.size()) +
                " poses for " + std::to_string(CountOf(observations)) +
                " images");
    }
  }

  CalibrationProblem problem;
  problem.observations = observations;
  problem.rig_template = rig.rig;
  problem.rig_template.v_off.setZero();
  problem.initial_poses = InitPoses(observations, rig.rig.intrinsics);

  Json report = ReportHeader("calibrate");
  report["inputs"]["observations"] = obs_input.Describe();
  report["inputs"]["board"] = board_input.Describe();
  report["inputs"]["rig"] = rig_input.Describe();
  if (holdout_input) report["inputs"]["holdout"] = holdout_input->Describe();
  if (truth_input) report["inputs"]["ground_truth"] = truth_input->Describe();

  DirectSolverOptions direct_options;
  direct_options.image_diagonal_px = rig.rig.intrinsics.Diagonal();
  std::vector<CenterEstimate> estimates;
  if (options.init_from_direct) {
    const DecenteringInitialization init =
        InitialDecentering(observations, problem.rig_template);
    estimates = init.estimates;
    Json& direct = report["direct_initialization"];
    direct["usable"] = init.usable;
    if (init.usable) {
      problem.initial_v_off = init.v_off;
      direct["refraction_center_px"] = CenterJson(init.refraction_center_px);
      direct["sign"] = SignJson(init.sign);
    } else {
      direct["refraction_center_px"] = nullptr;
      direct["sign"] = nullptr;
    }
  } else {
    for (const ImageObservation& image : observations.images) {
      estimates.push_back(EstimateCenter(image, board, direct_options));
    }
  }
  report["initial_v_off_m"] = Vector(problem.initial_v_off);

  CalibrationOptions calibration_options;
  calibration_options.residual_metric = metric;
  calibration_options.max_iterations = options.max_iterations;
  calibration_options.threads = common.threads;
  log.Info("calibrate: " + std::to_string(CountOf(observations)) +
           " images, " + std::to_string(problem.parameter_count()) +
           " parameters");
  const CalibrationResult result = Calibrate(problem, calibration_options);
  log.Info("calibrate: " + result.termination + " after " +
           std::to_string(result.iterations) + " iterations");

  report["v_off_m"] = Vector(result.v_off);
  report["v_off_covariance_m2"] = Matrix(result.covariance_voff);
  report["rms_reproj_px"] = result.rms_reproj_px;
  report["rms_board_residual_m"] = result.rms_board_residual;
  {
    CameraRig calibrated = rig.rig;
    calibrated.v_off = result.v_off;
    report["refraction_center_px"] =
        CenterJson(ComputeRefractionAxis(calibrated).refraction_center_px);
  }
  Json& solver = report["solver"];
  solver["residual_metric"] = options.residual;
  solver["converged"] = result.converged;
  solver["termination"] = result.termination;
  solver["iterations"] = result.iterations;
  solver["initial_energy"] = result.initial_energy;
  solver["final_energy"] = result.final_energy;
  solver["residual_corners"] = result.residual_corners;
  solver["dropped_corners"] = result.dropped_corners;
  solver["warnings"] = result.warnings;
  report["images"] = Json::array();
  for (size_t i = 0; i < observations.images.size(); ++i) {
    Json image;
    image["image_id"] = observations.images[i].id;
    image["homography_mapping_error_px"] = estimates[i].homography_error_px;
    image["pose"] = PoseToJson(result.poses[i]);
    report["images"].push_back(image);
  }
  if (truth) {
    const PoseErrorReport error = PoseError(result.poses, truth->poses);
    report["ate_mm"] = 1e3 * error.ate_trans;
    report["rotation_error_deg_mean"] =
        error.rotation_angle_error_mean / kDegToRad;
    report["v_off_error_mm"] = Vector(1e3 * (result.v_off - truth->v_off));
  }
  if (holdout) {
    CameraRig calibrated = rig.rig;
    calibrated.v_off = result.v_off;
    const HoldoutReport validation =
        ValidateHoldout(calibrated, *holdout, holdout_mode);
    Json& json = report["holdout"];
    json["mode"] = options.holdout_mode;
    json["mean_error_px"] = validation.mean_error_px;
    json["per_image_mean_px"] = validation.per_image_mean_px;
    json["scored_corners"] = validation.scored_corners;
  }
  if (!options.out_path.empty()) {
    WriteJson(options.out_path, report);
  } else {
    std::cout << report.dump(2) << "\n";
  }
  if (!result.converged) {
    std::cerr << "error [" << ErrorCodeName(ErrorCode::kNonConvergence)
              << "]: " << result.termination << "\n";
    return kExitNumericalFailure;
  }
  return kExitOk;
}

int RunValidate(const ValidateOptions& options, const CommonOptions& common) {
  Logger log(common.log_path);
  const InputFile rig_input = ReadInput(options.rig_path);
  const InputFile board_input = ReadInput(options.board_path);
  const InputFile obs_input = ReadInput(options.observations_path);
  const RigFile rig = ParseRig(rig_input);
  RequireVOff(rig, options.rig_path);
  const ChessboardSpec board = ParseBoard(board_input);
  const ObservationSet observations = ParseObservations(obs_input, board);
  const HoldoutMode mode = ParseHoldoutMode(options.mode);
  log.Info("validate: " + std::to_string(CountOf(observations)) + " images");
  const HoldoutReport validation = ValidateHoldout(rig.rig, observations, mode);

  Json report = ReportHeader("validate");
  report["inputs"]["observations"] = obs_input.Describe();
  report["inputs"]["board"] = board_input.Describe();
  report["inputs"]["rig"] = rig_input.Describe();
  report["mode"] = options.mode;
  report["mean_error_px"] = validation.mean_error_px;
  report["scored_corners"] = validation.scored_corners;
  report["images"] = Json::array();
  for (size_t i = 0; i < observations.images.size(); ++i) {
    Json image;
    image["image_id"] = observations.images[i].id;
    image["mean_error_px"] = validation.per_image_mean_px[i];
    report["images"].push_back(image);
  }
  if (!options.out_path.empty()) {
    WriteJson(options.out_path, report);
  } else {
    std::cout << report.dump(2) << "\n";
  }
  return kExitOk;
}

int RunDisplacementField(const DisplacementFieldOptions& options,
                         const CommonOptions& common) {
  Logger log(common.log_path);
  const InputFile rig_input = ReadInput(options.rig_path);
  const RigFile rig = ParseRig(rig_input);
  RequireVOff(rig, options.rig_path);
  if (!(options.depth_m > rig.rig.dome.outer_radius())) {
    Throw(ErrorCode::kInvalidArgument,
          "--depth must exceed the dome outer radius");
  }
  if (options.columns < 2 || options.rows < 2) {
    Throw(ErrorCode::kInvalidArgument, "grid needs at least 2 x 2 nodes");
  }
  GridSpec grid;
  grid.columns = options.columns;
  grid.rows = options.rows;
  log.Info("displacement-field: depth " + FormatDouble(options.depth_m));
  const DisplacementField field =
      ComputeDisplacementField(rig.rig, options.depth_m, grid);

  std::ostringstream csv;
  csv << "row,col,in_air_u_px,in_air_v_px,refracted_u_px,refracted_v_px,"
         "valid\n";
  double max_arrow = 0.0;
  double sum_arrow = 0.0;
  int valid = 0;
  int inward = 0;
  int outward = 0;
  const bool finite_center =
      std::abs(field.refraction_center_px.z()) >
      1e-12 * field.refraction_center_px.norm();
  for (int row = 0; row < grid.rows; ++row) {
    for (int col = 0; col < grid.columns; ++col) {
      const DisplacementSample& s = field.samples[row * grid.columns + col];
      csv << row << "," << col << "," << FormatDouble(s.in_air_px.x()) << ","
          << FormatDouble(s.in_air_px.y()) << ","
          << FormatDouble(s.refracted_px.x()) << ","
          << FormatDouble(s.refracted_px.y()) << "," << (s.valid ? 1 : 0)
          << "\n";
      if (!s.valid) continue;
      ++valid;
      const double length = s.arrow().norm();
      max_arrow = std::max(max_arrow, length);
      sum_arrow += length;
      if (finite_center && length > 0.0) {
        const Eigen::Vector2d to_center =
            field.refraction_center_px.hnormalized() - s.in_air_px;
        const double dot = s.arrow().dot(to_center);
        if (dot > 0.0) ++inward;
        if (dot < 0.0) ++outward;
      }
    }
  }

  const CameraIntrinsics& k = rig.rig.intrinsics;
  SvgCanvas canvas(k.width, k.height);
  canvas.Rect(0, 0, k.width, k.height, "black", "white");
  const double spacing = std::min(k.width / static_cast<double>(grid.columns),
                                  k.height / static_cast<double>(grid.rows));
  const double scale = max_arrow > 0.0 ? 0.8 * spacing / max_arrow : 1.0;
  for (const DisplacementSample& s : field.samples) {
    if (!s.valid) continue;
    canvas.Circle(s.in_air_px, 2.0, "#969696");
    if (s.arrow().norm() > 0.0) {
      canvas.Arrow(s.in_air_px, s.in_air_px + scale * s.arrow(), "#08519c");
    }
  }
  if (finite_center && !field.centered) {
    canvas.Circle(field.refraction_center_px.hnormalized(), 4.0, "#e31a1c");
  }
  canvas.Text(Eigen::Vector2d(20.0, k.height - 20.0),
              "arrows scaled x" + FormatDouble(std::round(scale * 100) / 100));

  Json summary = ReportHeader("displacement-field");
  summary["inputs"]["rig"] = rig_input.Describe();
  summary["depth_m"] = options.depth_m;
  summary["grid"] = {{"columns", grid.columns}, {"rows", grid.rows}};
  summary["centered"] = field.centered;
  summary["refraction_center_px"] = field.centered
                                        ? Json(nullptr)
                                        : CenterJson(field.refraction_center_px);
  summary["valid_samples"] = valid;
  summary["mean_arrow_px"] = valid > 0 ? sum_arrow / valid : 0.0;
  summary["max_arrow_px"] = max_arrow;
  summary["inward_arrows"] = inward;
  summary["outward_arrows"] = outward;
  summary["svg_arrow_scale"] = scale;

  EnsureDirectory(options.out_dir);
  WriteTextFile(JoinPath(options.out_dir, "displacement.csv"), csv.str());
  WriteTextFile(JoinPath(options.out_dir, "displacement.svg"), canvas.str());
  WriteJson(JoinPath(options.out_dir, "displacement.json"), summary);
  return kExitOk;
}

int RunIsoCurves(const IsoCurvesOptions& options, const CommonOptions& common) {
  Logger log(common.log_path);
  const InputFile rig_input = ReadInput(options.rig_path);
  const RigFile rig = ParseRig(rig_input);
  RequireVOff(rig, options.rig_path);
  if (options.samples < 8) {
    Throw(ErrorCode::kInvalidArgument, "--samples must be at least 8");
  }
  if (rig.rig.IsCentered()) {
    Throw(ErrorCode::kThetaUnreachable,
          "centered rig: no viewing ray is refracted");
  }
  const double max_deviation = MaxDeviation(rig.rig);
  std::vector<double> thetas;
  if (options.thetas_deg.empty()) {
    if (options.count < 1) {
      Throw(ErrorCode::kInvalidArgument, "--count must be at least 1");
    }
    for (int i = 1; i <= options.count; ++i) {
      thetas.push_back(max_deviation * i / (options.count + 1));
    }
  } else {
    for (double theta : options.thetas_deg) thetas.push_back(theta * kDegToRad);
  }
  log.Info("iso-curves: " + std::to_string(thetas.size()) + " curves");

  const CameraIntrinsics& k = rig.rig.intrinsics;
  SvgCanvas canvas(k.width, k.height);
  canvas.Rect(0, 0, k.width, k.height, "black", "white");
  std::ostringstream csv;
  csv << "theta_deg,cone,index,u_px,v_px,inside\n";
  Json summary = ReportHeader("iso-curves");
  summary["inputs"]["rig"] = rig_input.Describe();
  summary["max_deviation_deg"] = max_deviation / kDegToRad;
  summary["curves"] = Json::array();
  const std::array<std::string, 2> colors = {"#08519c", "#a50f15"};
  for (double theta : thetas) {
    const IsoCurve curve = IsoRefractionCurve(rig.rig, theta, options.samples);
    const std::string theta_text = FormatDouble(theta / kDegToRad);
    Json json;
    json["theta_deg"] = theta / kDegToRad;
    json["incidence_deg"] = curve.incidence / kDegToRad;
    json["cone_angles_deg"] = {curve.cone_angles[0] / kDegToRad,
                               curve.cone_angles[1] / kDegToRad};
    json["points"] = {curve.branches[0].size(), curve.branches[1].size()};
    json["inside_count"] = curve.inside_count;
    summary["curves"].push_back(json);
    for (int cone = 0; cone < 2; ++cone) {
      const std::vector<Eigen::Vector2d>& points = curve.branches[cone];
      std::vector<Eigen::Vector2d> run;
      for (size_t i = 0; i < points.size(); ++i) {
        const bool inside = k.Contains(points[i]);
        csv << theta_text << "," << cone << "," << i << ","
            << FormatDouble(points[i].x()) << "," << FormatDouble(points[i].y())
            << "," << (inside ? 1 : 0) << "\n";
        if (inside) {
          run.push_back(points[i]);
        } else {
          if (run.size() > 1) canvas.Polyline(run, colors[cone]);
          run.clear();
        }
      }
      if (run.size() > 1) canvas.Polyline(run, colors[cone]);
    }
  }
  const RefractionAxis axis = ComputeRefractionAxis(rig.rig);
  if (const auto r = axis.EuclideanCenter(); r && k.Contains(*r)) {
    canvas.Circle(*r, 4.0, "#e31a1c");
  }
  EnsureDirectory(options.out_dir);
  WriteTextFile(JoinPath(options.out_dir, "iso_curves.csv"), csv.str());
  WriteTextFile(JoinPath(options.out_dir, "iso_curves.svg"), canvas.str());
  WriteJson(JoinPath(options.out_dir, "iso_curves.json"), summary);
  return kExitOk;
}

int RunNoiseSweep(const NoiseSweepOptions& options,
                  const CommonOptions& common) {
  Logger log(common.log_path);
  const InputFile rig_input = ReadInput(options.rig_path);
  const RigFile rig = ParseRig(rig_input);
  RequireVOff(rig, options.rig_path);
  ChessboardSpec board;
  std::optional<InputFile> board_input;
  if (!options.board_path.empty()) {
    board_input = ReadInput(options.board_path);
    board = ParseBoard(*board_input);
  }
  if (options.sigmas.empty()) {
    Throw(ErrorCode::kInvalidArgument, "--sigmas must not be empty");
  }
  for (double sigma : options.sigmas) {
    if (!(sigma >= 0.0)) {
      Throw(ErrorCode::kInvalidArgument, "sigmas must be non-negative");
    }
  }
  if (options.images < 1) {
    Throw(ErrorCode::kInvalidArgument, "--images must be at least 1");
  }
  if (!(options.min_distance_m > 0.0) ||
      !(options.max_distance_m >= options.min_distance_m)) {
    Throw(ErrorCode::kInvalidArgument, "invalid distance range");
  }

  NoiseSweepConfig config;
  config.base.rig = rig.rig;
  config.base.board = board;
  config.base.n_images = options.images;
  config.base.rng_seed = options.seed;
  config.base.pose_sampler.min_distance_m = options.min_distance_m;
  config.base.pose_sampler.max_distance_m = options.max_distance_m;
  config.base.pose_sampler.max_tilt_rad = options.max_tilt_deg * kDegToRad;
  config.sigmas = options.sigmas;
  config.trials = options.trials;
  config.resample_poses = options.resample_poses;
  config.run_calibration = options.calibrate;
  config.threads = common.threads;
  log.Info("noise-sweep: " + std::to_string(options.sigmas.size()) +
           " sigmas x " + std::to_string(options.trials) + " trials");
  const std::vector<NoiseSweepRow> rows = RunNoiseSweep(config);

  std::ostringstream csv;
  csv << "sigma_px,trials,estimates,center_scatter_px,"
         "axis_angle_error_deg_mean,axis_angle_error_deg_std,"
         "sign_correct_rate,degenerate_rate,pooled_estimates,"
         "pooled_center_error_px,pooled_sign_correct_rate,calibrations,"
         "voff_error_mm_mean,voff_error_mm_std,failures\n";
  Json json = ReportHeader("noise-sweep");
  json["inputs"]["rig"] = rig_input.Describe();
  if (board_input) json["inputs"]["board"] = board_input->Describe();
  json["rng"]["algorithm"] = kRngAlgorithm;
  json["rng"]["seed"] = options.seed;
  json["images"] = options.images;
  json["trials"] = options.trials;
  json["pose_sampler"]["min_distance_m"] = options.min_distance_m;
  json["pose_sampler"]["max_distance_m"] = options.max_distance_m;
  json["pose_sampler"]["max_tilt_deg"] = options.max_tilt_deg;
  json["resample_poses"] = options.resample_poses;
  json["calibrate"] = options.calibrate;
  json["rows"] = Json::array();
  Series scatter{"single image", "#08519c", {}};
  Series pooled_scatter{"pooled", "#a50f15", {}};
  Series sign{"single image", "#08519c", {}};
  Series pooled_sign{"pooled", "#a50f15", {}};
  Series voff{"mean |error|", "#08519c", {}};
  for (const NoiseSweepRow& row : rows) {
    csv << FormatDouble(row.sigma_px) << "," << row.trials << ","
        << row.estimates << "," << FormatDouble(row.center_scatter_px) << ","
        << FormatDouble(row.axis_angle_error_deg_mean) << ","
        << FormatDouble(row.axis_angle_error_deg_std) << ","
        << FormatDouble(row.sign_correct_rate) << ","
        << FormatDouble(row.degenerate_rate) << "," << row.pooled_estimates
        << "," << FormatDouble(row.pooled_center_error_px) << ","
        << FormatDouble(row.pooled_sign_correct_rate) << ","
        << row.calibrations << "," << FormatDouble(row.voff_error_mm_mean)
        << "," << FormatDouble(row.voff_error_mm_std) << "," << row.failures
        << "\n";
    Json entry;
    entry["sigma_px"] = row.sigma_px;
    entry["estimates"] = row.estimates;
    entry["center_scatter_px"] = row.center_scatter_px;
    entry["axis_angle_error_deg_mean"] = row.axis_angle_error_deg_mean;
    entry["axis_angle_error_deg_std"] = row.axis_angle_error_deg_std;
    entry["sign_correct_rate"] = row.sign_correct_rate;
    entry["degenerate_rate"] = row.degenerate_rate;
    entry["pooled_estimates"] = row.pooled_estimates;
    entry["pooled_center_error_px"] = row.pooled_center_error_px;
    entry["pooled_sign_correct_rate"] = row.pooled_sign_correct_rate;
    entry["calibrations"] = row.calibrations;
    entry["voff_error_mm_mean"] = row.voff_error_mm_mean;
    entry["voff_error_mm_std"] = row.voff_error_mm_std;
    entry["failures"] = row.failures;
    json["rows"].push_back(entry);
    scatter.points.emplace_back(row.sigma_px, row.center_scatter_px);
    pooled_scatter.points.emplace_back(row.sigma_px,
                                       row.pooled_center_error_px);
    sign.points.emplace_back(row.sigma_px, row.sign_correct_rate);
    pooled_sign.points.emplace_back(row.sigma_px, row.pooled_sign_correct_rate);
    voff.points.emplace_back(row.sigma_px, row.voff_error_mm_mean);
  }
  EnsureDirectory(options.out_dir);
  WriteTextFile(JoinPath(options.out_dir, "sweep.csv"), csv.str());
  WriteJson(JoinPath(options.out_dir, "sweep.json"), json);
  WriteTextFile(JoinPath(options.out_dir, "sweep_center.svg"),
                LineChart("Refraction centre error", "noise sigma [px]",
                          "median error [px]", {scatter, pooled_scatter}));
  WriteTextFile(JoinPath(options.out_dir, "sweep_sign.svg"),
                LineChart("Decentering sign correctness", "noise sigma [px]",
                          "rate", {sign, pooled_sign}));
  if (options.calibrate) {
    WriteTextFile(JoinPath(options.out_dir, "sweep_voff.svg"),
                  LineChart("Calibrated v_off error", "noise sigma [px]",
                            "mean per-axis error [mm]", {voff}));
  }
  return kExitOk;
}

}  // namespace domeport::tools

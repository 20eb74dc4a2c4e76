#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "domeport/observations.h"
#include "domeport/random.h"
#include "domeport/types.h"

namespace domeport {

// Board centre placed at a uniformly drawn pixel and camera depth, tilted
// about the camera x and y axes and spun in-plane, then rejected unless every
// corner projects inside the image.
struct PoseSamplerConfig {
  double min_distance_m = 0.4;
  double max_distance_m = 2.0;
  double max_tilt_rad = 40.0 * 3.14159265358979323846 / 180.0;
  double image_margin_px = 0.0;
  int max_attempts = 10000;
};

struct SimConfig {
  CameraRig rig;
  ChessboardSpec board;
  int n_images = 10;
  PoseSamplerConfig pose_sampler;
  double noise_sigma_px = 0.0;
  uint64_t rng_seed = 0;
};

struct GroundTruth {
  Eigen::Vector3d v_off = Eigen::Vector3d::Zero();
  std::vector<Pose> poses;
};

struct SimulatedData {
  ObservationSet observations;
  GroundTruth ground_truth;
};

// World coordinates of a board point under a board-to-camera pose.
Eigen::Vector3d BoardPointToWorld(const CameraRig& rig, const Pose& pose,
                                  const Eigen::Vector3d& board_point);

// Refracted projection of every board corner.
std::vector<Eigen::Vector2d> ProjectBoard(const CameraRig& rig,
                                          const ChessboardSpec& board,
                                          const Pose& pose);

// Throws kPoseSamplingExhausted after max_attempts rejections.
Pose SamplePose(const CameraRig& rig, const ChessboardSpec& board,
                const PoseSamplerConfig& sampler, Rng& rng);

// Poses for images 0..n-1, image i drawn from child stream 2i of the seed.
std::vector<Pose> SamplePoses(const SimConfig& config);

// Projects the boards and adds iid Gaussian pixel noise; image i draws its
// noise from child stream 2i+1 of noise_seed.
ObservationSet ObserveBoards(const CameraRig& rig, const ChessboardSpec& board,
                             const std::vector<Pose>& poses, double sigma_px,
                             uint64_t noise_seed);

SimulatedData GenerateObservations(const SimConfig& config);

struct GridSpec {
  int columns = 16;
  int rows = 12;
  double margin_px = 0.0;
};

struct DisplacementSample {
  Eigen::Vector2d in_air_px = Eigen::Vector2d::Zero();
  Eigen::Vector2d refracted_px = Eigen::Vector2d::Zero();
  bool valid = true;

  Eigen::Vector2d arrow() const { return refracted_px - in_air_px; }
};

struct DisplacementField {
  double scene_depth = 1.0;
  GridSpec grid;
  Eigen::Vector3d refraction_center_px = Eigen::Vector3d::UnitZ();
  bool centered = false;
  std::vector<DisplacementSample> samples;  // row-major over the grid
};

// Pixel distance of the refracted point from the line through the in-air
// point and the refraction centre, relative to max(1, |arrow|).
double CollinearityResidual(const DisplacementSample& sample,
                            const Eigen::Vector3d& refraction_center);

// Pinhole back-projection of each grid pixel to camera depth `depth`, then
// refracted projection of that point.
DisplacementField ComputeDisplacementField(const CameraRig& rig, double depth,
                                           const GridSpec& grid = {});

// Angle between incident and refracted ray at an interface with incidence
// angle alpha, inverted: the incidence angle whose deviation equals theta.
double IncidenceForDeviation(double theta, double mu_in, double mu_out);

struct IsoCurve {
  double theta = 0.0;
  double incidence = 0.0;
  // Angles of the two viewing cones measured from the camera-to-dome-centre
  // direction; they coincide at 90 degrees.
  std::array<double, 2> cone_angles = {0.0, 0.0};
  // Image points on each cone with positive depth.
  std::array<std::vector<Eigen::Vector2d>, 2> branches;
  // Sample points that also lie inside the image.
  int inside_count = 0;
};

// Image locus of viewing rays refracted by theta at the inner interface
// (air to glass for thick domes, air to water for thin ones). Throws
// kThetaUnreachable when theta exceeds the largest deviation of the rig.
IsoCurve IsoRefractionCurve(const CameraRig& rig, double theta,
                            int samples_per_cone = 360);

// Largest inner-interface deviation over all viewing rays of the rig.
double MaxDeviation(const CameraRig& rig);

struct NoiseSweepConfig {
  SimConfig base;
  std::vector<double> sigmas = {0.0, 0.2, 0.5, 0.8, 1.0, 1.2, 1.5};
  int trials = 20;
  bool resample_poses = false;
  bool run_calibration = false;
  int threads = 1;
};

struct NoiseSweepRow {
  double sigma_px = 0.0;
  int trials = 0;
  int estimates = 0;
  // Median single-image distance between estimated and true centre.
  double center_scatter_px = 0.0;
  // Angle between estimated and true v_off direction, sign from convexity.
  double axis_angle_error_deg_mean = 0.0;
  double axis_angle_error_deg_std = 0.0;
  double sign_correct_rate = 0.0;
  double degenerate_rate = 0.0;
  // Per trial: all images combined into one centre and one pooled sign vote.
  int pooled_estimates = 0;
  double pooled_center_error_px = 0.0;
  double pooled_sign_correct_rate = 0.0;
  // Calibration statistics, when requested: mean absolute per-axis error.
  int calibrations = 0;
  double voff_error_mm_mean = 0.0;
  double voff_error_mm_std = 0.0;
  int failures = 0;
};

// Trial t draws one unit noise pattern from child stream t of the noise
// stream and scales it by each sigma, so rows differ only in noise level.
std::vector<NoiseSweepRow> RunNoiseSweep(const NoiseSweepConfig& config);

}  // namespace domeport

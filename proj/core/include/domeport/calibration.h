#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "domeport/direct_solver.h"
#include "domeport/observations.h"
#include "domeport/types.h"

namespace domeport {

struct CalibrationProblem {
  ObservationSet observations;
  // Intrinsics, rotation, media and dome; v_off is ignored.
  CameraRig rig_template;
  Eigen::Vector3d initial_v_off = Eigen::Vector3d::Zero();
  // Board-to-camera poses, one per image.
  std::vector<Pose> initial_poses;

  int parameter_count() const {
    return 3 + 6 * static_cast<int>(observations.images.size());
  }
};

enum class ResidualMetric {
  kBoardPlane,   // X - X_hat in metres
  kImageScaled,  // X - X_hat mapped through the pinhole board-to-pixel Jacobian
};

struct CalibrationOptions {
  ResidualMetric residual_metric = ResidualMetric::kImageScaled;
  int max_iterations = 100;
  double initial_lambda = 1e-6;
  double relative_decrease_tolerance = 1e-12;
  double gradient_tolerance = 1e-10;
  int threads = 1;
};

struct CalibrationResult {
  Eigen::Vector3d v_off = Eigen::Vector3d::Zero();
  std::vector<Pose> poses;
  double rms_board_residual = 0.0;  // metres
  double rms_reproj_px = 0.0;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string termination;
  Eigen::Matrix3d covariance_voff = Eigen::Matrix3d::Zero();
  int residual_corners = 0;
  int dropped_corners = 0;
  // Energy after every accepted step, starting with the initial energy.
  std::vector<double> energy_history;
  std::vector<std::string> warnings;
};

struct PoseErrorReport {
  double ate_trans = 0.0;                  // metres
  double rotation_angle_error_mean = 0.0;  // radians
};

// X - X_hat in board-plane metres, where X_hat is the back-projected water ray
// of the corner intersected with the board plane. Throws kRayParallelToBoard
// when the ray is within 0.5 degrees of the plane or meets it behind the dome.
Eigen::Vector2d BoardResidual(const Eigen::Vector2d& corner_px,
                              const Eigen::Vector3d& board_point,
                              const Eigen::Vector3d& v_off, const Pose& pose,
                              const CameraRig& rig_template);

// Jacobian of BoardResidual with respect to (v_off, w, t), where the pose
// rotation is perturbed as exp([w]x) R.
Eigen::Matrix<double, 2, 9> BoardResidualJacobian(
    const Eigen::Vector2d& corner_px, const Eigen::Vector3d& board_point,
    const Eigen::Vector3d& v_off, const Pose& pose,
    const CameraRig& rig_template);

// Board-to-camera poses from per-image homography decomposition, ignoring
// refraction.
std::vector<Pose> InitPoses(const ObservationSet& observations,
                            const CameraIntrinsics& intrinsics);

struct DecenteringInitialization {
  Eigen::Vector3d v_off = Eigen::Vector3d::Zero();
  Eigen::Vector3d refraction_center_px = Eigen::Vector3d::UnitZ();
  SignResult sign;
  std::vector<CenterEstimate> estimates;
  bool usable = false;
};

// Starting v_off from the direct solver: the axis through the combined
// refraction centre, oriented by the pooled convexity vote, at
// magnitude_fraction of the inner radius.
DecenteringInitialization InitialDecentering(
    const ObservationSet& observations, const CameraRig& rig_template,
    double magnitude_fraction = 0.05);

// Levenberg-Marquardt over (v_off, poses) with the pose blocks eliminated by
// a Schur complement. Non-convergence is reported in the result.
CalibrationResult Calibrate(const CalibrationProblem& problem,
                            const CalibrationOptions& options = {});

// Residuals and dense Jacobian over all 6m+3 parameters, ordered
// (v_off, w_1, t_1, ..., w_m, t_m). Corners whose residual is undefined
// contribute zero rows.
Eigen::VectorXd StackedResiduals(const CalibrationProblem& problem,
                                 const Eigen::Vector3d& v_off,
                                 const std::vector<Pose>& poses);
Eigen::MatrixXd StackedJacobian(const CalibrationProblem& problem,
                                const Eigen::Vector3d& v_off,
                                const std::vector<Pose>& poses);

// Sum of squared board residuals.
double CalibrationEnergy(const CalibrationProblem& problem,
                         const Eigen::Vector3d& v_off,
                         const std::vector<Pose>& poses);

// Reprojection RMS (pixels, per corner) by forward projection.
double ReprojectionRms(const ObservationSet& observations, const CameraRig& rig,
                       const std::vector<Pose>& poses);

PoseErrorReport PoseError(const std::vector<Pose>& estimated,
                          const std::vector<Pose>& ground_truth);

enum class HoldoutMode {
  kOuterFour,  // pose from the 4 outermost corners, score the rest
  kAll,        // pose from every corner, score every corner
};

struct HoldoutReport {
  double mean_error_px = 0.0;
  std::vector<double> per_image_mean_px;
  int scored_corners = 0;
};

// Board pose with v_off fixed, refined on board residuals of the selected
// corners from a homography start.
Pose EstimateBoardPose(const CameraRig& rig, const ChessboardSpec& board,
                       const ImageObservation& image,
                       const std::vector<int>& corner_indices);

HoldoutReport ValidateHoldout(const CameraRig& calibrated_rig,
                              const ObservationSet& holdout,
                              HoldoutMode mode = HoldoutMode::kOuterFour);

}  // namespace domeport

#include "domeport/homography.h"

#include <cmath>

#include <Eigen/Dense>

#include "domeport/error.h"

namespace domeport {
namespace {

Eigen::Matrix3d DirectLinearTransform(const std::vector<Eigen::Vector2d>& src,
                                      const std::vector<Eigen::Vector2d>& dst) {
  const Eigen::Matrix3d t_src = HartleyNormalization(src);
  const Eigen::Matrix3d t_dst = HartleyNormalization(dst);
  Eigen::MatrixXd a(2 * src.size(), 9);
  for (size_t k = 0; k < src.size(); ++k) {
    const Eigen::Vector3d x = t_src * src[k].homogeneous();
    const Eigen::Vector3d y = t_dst * dst[k].homogeneous();
    a.row(2 * k) << 0, 0, 0, -y.z() * x.transpose(), y.y() * x.transpose();
    a.row(2 * k + 1) << y.z() * x.transpose(), 0, 0, 0, -y.x() * x.transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return t_dst.inverse() * hn * t_src;
}

double SumSquaredResidual(const Eigen::Matrix3d& H,
                          const std::vector<Eigen::Vector2d>& src,
                          const std::vector<Eigen::Vector2d>& dst) {
  double sum = 0.0;
  for (size_t k = 0; k < src.size(); ++k) {
    sum += (ApplyHomography(H, src[k]) - dst[k]).squaredNorm();
  }
  return sum;
}

// LM over the 9 entries with the scale fixed by keeping |h| = 1 through a
// projection after each step.
Eigen::Matrix3d RefineHomography(Eigen::Matrix3d H,
                                 const std::vector<Eigen::Vector2d>& src,
                                 const std::vector<Eigen::Vector2d>& dst) {
  H /= H.norm();
  double cost = SumSquaredResidual(H, src, dst);
  double lambda = 1e-6;
  const int n = static_cast<int>(src.size());
  for (int iteration = 0; iteration < 50; ++iteration) {
    Eigen::MatrixXd jacobian(2 * n, 9);
    Eigen::VectorXd residual(2 * n);
    for (int k = 0; k < n; ++k) {
      const Eigen::Vector3d x = src[k].homogeneous();
      const Eigen::Vector3d y = H * x;
      const double w = y.z();
      residual(2 * k) = y.x() / w - dst[k].x();
      residual(2 * k + 1) = y.y() / w - dst[k].y();
      jacobian.row(2 * k) << x.transpose() / w, 0, 0, 0,
          -y.x() / (w * w) * x.transpose();
      jacobian.row(2 * k + 1) << 0, 0, 0, x.transpose() / w,
          -y.y() / (w * w) * x.transpose();
    }
    const Eigen::MatrixXd jtj = jacobian.transpose() * jacobian;
    const Eigen::VectorXd gradient = jacobian.transpose() * residual;
    if (gradient.norm() < 1e-14 * (1.0 + cost)) break;
    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
      Eigen::Matrix3d candidate;
      candidate << H(0, 0) + step(0), H(0, 1) + step(1), H(0, 2) + step(2),
          H(1, 0) + step(3), H(1, 1) + step(4), H(1, 2) + step(5),
          H(2, 0) + step(6), H(2, 1) + step(7), H(2, 2) + step(8);
      candidate /= candidate.norm();
      const double candidate_cost = SumSquaredResidual(candidate, src, dst);
      if (std::isfinite(candidate_cost) && candidate_cost <= cost) {
        const double decrease = cost - candidate_cost;
        H = candidate;
        cost = candidate_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (decrease <= 1e-15 * (1.0 + cost)) return H;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  return H;
}

}  // namespace

Eigen::Matrix3d HartleyNormalization(
    const std::vector<Eigen::Vector2d>& points) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const Eigen::Vector2d& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  double mean_squared = 0.0;
  for (const Eigen::Vector2d& p : points) {
    mean_squared += (p - centroid).squaredNorm();
  }
  mean_squared /= static_cast<double>(points.size());
  const double scale =
      mean_squared > 0.0 ? std::sqrt(2.0 / mean_squared) : 1.0;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = scale;
  t(1, 1) = scale;
  t(0, 2) = -scale * centroid.x();
  t(1, 2) = -scale * centroid.y();
  return t;
}

std::vector<Eigen::Vector2d> BoardPlanePoints(const ChessboardSpec& board) {
  std::vector<Eigen::Vector2d> points;
  points.reserve(board.corner_count());
  for (int index = 0; index < board.corner_count(); ++index) {
    points.push_back(board.Corner(index).head<2>());
  }
  return points;
}

Eigen::Vector2d ApplyHomography(const Eigen::Matrix3d& H,
                                const Eigen::Vector2d& point) {
  return (H * point.homogeneous()).hnormalized();
}

HomographyEstimate EstimateHomography(const std::vector<Eigen::Vector2d>& src,
                                      const std::vector<Eigen::Vector2d>& dst,
                                      bool refine) {
  if (src.size() != dst.size()) {
    Throw(ErrorCode::kLengthMismatch, "homography point lists differ in size");
  }
  if (src.size() < 4) {
    Throw(ErrorCode::kInsufficientCorrespondences,
          "homography needs at least 4 correspondences");
  }
  HomographyEstimate estimate;
  estimate.H = DirectLinearTransform(src, dst);
  if (refine && src.size() > 4) {
    estimate.H = RefineHomography(estimate.H, src, dst);
  }
  if (estimate.H(2, 2) != 0.0) estimate.H /= estimate.H(2, 2);
  estimate.rms_px = std::sqrt(SumSquaredResidual(estimate.H, src, dst) /
                              (2.0 * static_cast<double>(src.size())));
  return estimate;
}

double HomographyMappingError(const ImageObservation& image,
                              const ChessboardSpec& board) {
  return EstimateHomography(BoardPlanePoints(board), image.corners_px).rms_px;
}

Pose PoseFromHomography(const Eigen::Matrix3d& H,
                        const CameraIntrinsics& intrinsics) {
  Eigen::JacobiSVD<Eigen::Matrix3d> rank_check(H);
  const Eigen::Vector3d singular = rank_check.singularValues();
  if (!(singular(2) > 1e-12 * singular(0))) {
    Throw(ErrorCode::kPlanarDegeneracy, "board homography is rank deficient");
  }
  const Eigen::Matrix3d m = intrinsics.KInverse() * H;
  double scale = 2.0 / (m.col(0).norm() + m.col(1).norm());
  if (m(2, 2) * scale < 0.0) scale = -scale;
  const Eigen::Vector3d r1 = scale * m.col(0);
  const Eigen::Vector3d r2 = scale * m.col(1);
  Eigen::Matrix3d approx;
  approx << r1, r2, r1.cross(r2);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      approx, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d rotation = svd.matrixU() * svd.matrixV().transpose();
  if (rotation.determinant() < 0.0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    rotation = u * svd.matrixV().transpose();
  }
  Pose pose;
  pose.rotation = rotation;
  pose.translation = scale * m.col(2);
  return pose;
}

}  // namespace domeport

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "domeport/error.h"
#include "domeport/geometry.h"
#include "domeport/polynomial.h"
#include "domeport/projection.h"
#include "domeport/tolerances.h"
#include "test_support.h"

namespace domeport {
namespace {

using testing::ReferenceRig;

const Tolerances& kTol = kTolerances;

void ExpectCode(ErrorCode code, const std::function<void()>& body) {
  try {
    body();
    ADD_FAILURE() << "expected " << ErrorCodeName(code);
  } catch (const Error& error) {
    EXPECT_EQ(error.code(), code) << error.what();
  }
}

// Point at camera depth `depth` on the pinhole ray of `pixel`.
Eigen::Vector3d PinholePoint(const CameraRig& rig, const Eigen::Vector2d& pixel,
                             double depth) {
  const Eigen::Vector3d camera = depth * rig.intrinsics.PixelToRay(pixel);
  return rig.rotation.transpose() * camera + rig.v_off;
}

double HomogeneousDeterminant(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                              const Eigen::Vector3d& c) {
  Eigen::Matrix3d m;
  m << a.normalized(), b.normalized(), c.normalized();
  return std::abs(m.determinant());
}

TEST(ProjectInAir, Examples) {
  CameraRig rig = ReferenceRig(Eigen::Vector3d::Zero());
  rig.intrinsics.focal_length_x = rig.intrinsics.focal_length_y = 1000.0;
  const Eigen::Vector2d pixel = ProjectInAir(rig, {0.1, 0.0, 1.0});
  EXPECT_NEAR((pixel - Eigen::Vector2d(1124, 768)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((ProjectInAir(rig, {0, 0, 3.0}) - rig.intrinsics.principal_point)
                  .norm(),
              0.0, 1e-12);
  ExpectCode(ErrorCode::kBehindCamera, [&] { ProjectInAir(rig, {0, 0, -1.0}); });
  ExpectCode(ErrorCode::kBehindCamera, [&] { ProjectInAir(rig, {1.0, 0, 0.0}); });
}

TEST(ProjectInAir, InvertsPixelRay) {
  Rng rng(4);
  const CameraRig rig = testing::RandomRig(rng, DomeModel::kThick);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d pixel = testing::RandomPixel(rig, rng);
    const Eigen::Vector3d point = PinholePoint(rig, pixel, rng.Uniform(0.2, 5.0));
    EXPECT_NEAR((ProjectInAir(rig, point) - pixel).norm(), 0.0, 1e-9);
  }
}

TEST(ProjectThinAnalytic, MatchesLineSearchOracle) {
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    const CameraRig rig = testing::RandomRig(rng, DomeModel::kThin);
    const testing::ScenePoint scene = testing::RandomScenePoint(rig, rng, 0.3, 5.0);
    const ProjectionResult result = ProjectThinAnalytic(rig, scene.point);
    const Eigen::Vector2d oracle = testing::LineSearchProjection(rig, scene.point);
    EXPECT_LT((result.pixel - oracle).norm(), 1e-6);
    EXPECT_LT((result.pixel - scene.pixel).norm(), 1e-6);
    EXPECT_LT(result.snell_residual, kTol.root_snell);
    EXPECT_LT(result.line_distance_m, kTol.projection_line_distance_m);
    EXPECT_GE(result.branch_count, 1);
    EXPECT_NEAR(result.refraction_point_2d.norm(), rig.dome.inner_radius, 1e-12);
  }
}

TEST(ProjectThickIterative, MatchesLineSearchOracle) {
  Rng rng(22);
  for (int i = 0; i < 100; ++i) {
    const CameraRig rig = testing::RandomRig(rng, DomeModel::kThick);
    const testing::ScenePoint scene = testing::RandomScenePoint(rig, rng, 0.3, 5.0);
    const ProjectionResult result = ProjectThickIterative(rig, scene.point);
    const Eigen::Vector2d oracle = testing::LineSearchProjection(rig, scene.point);
    EXPECT_LT((result.pixel - oracle).norm(), 1e-6);
    EXPECT_LT((result.pixel - scene.pixel).norm(), 1e-6);
    EXPECT_LT(result.line_distance_m, kTol.projection_line_distance_m);
    EXPECT_LT(result.snell_residual, kTol.snell);
    EXPECT_GT(result.iterations, 0);
  }
}

// Decenterings of the synthetic experiments with scene points 1 m away. The
// gap grows linearly with the glass thickness and reaches about 1.5e-4 px at
// 1 um on the worst pixels, so the limit is checked at 0.1 um.
TEST(Projection, ThickWithVanishingThicknessMatchesThin) {
  Rng rng(23);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    CameraRig thick = ReferenceRig(0.0024 * testing::RandomUnit(rng));
    thick.dome.thickness = 1e-7;
    CameraRig thin = thick;
    thin.dome.model = DomeModel::kThin;
    const testing::ScenePoint scene = testing::RandomScenePoint(thin, rng, 1.0, 1.0);
    const Eigen::Vector2d a = ProjectThickIterative(thick, scene.point).pixel;
    const Eigen::Vector2d b = ProjectThinAnalytic(thin, scene.point).pixel;
    worst = std::max(worst, (a - b).norm());
  }
  EXPECT_LT(worst, 1e-4);
}

// The gap is first order in the thickness on arbitrary rigs.
TEST(Projection, ThickToThinGapIsLinearInThickness) {
  Rng rng(32);
  for (int i = 0; i < 100; ++i) {
    const CameraRig base = testing::RandomRig(rng, DomeModel::kThick);
    CameraRig thin = base;
    thin.dome.model = DomeModel::kThin;
    const testing::ScenePoint scene = testing::RandomScenePoint(thin, rng, 0.5, 5.0);
    const Eigen::Vector2d reference = ProjectThinAnalytic(thin, scene.point).pixel;
    double gaps[2];
    for (int k = 0; k < 2; ++k) {
      CameraRig thick = base;
      thick.dome.thickness = k == 0 ? 1e-5 : 1e-6;
      gaps[k] = (ProjectThickIterative(thick, scene.point).pixel - reference).norm();
    }
    EXPECT_LT(gaps[1], 1e-2);
    EXPECT_NEAR(gaps[0] / gaps[1], 10.0, 0.2);
  }
}

TEST(Projection, CenteredRigIsPinhole) {
  Rng rng(24);
  for (DomeModel model : {DomeModel::kThin, DomeModel::kThick}) {
    const CameraRig rig = ReferenceRig(Eigen::Vector3d::Zero(), model);
    for (int i = 0; i < 50; ++i) {
      const Eigen::Vector3d point =
          PinholePoint(rig, testing::RandomPixel(rig, rng), rng.Uniform(0.3, 4.0));
      EXPECT_LT((Project(rig, point).pixel - ProjectInAir(rig, point)).norm(), 1e-9);
    }
  }
}

TEST(Projection, PointOnAxisProjectsToRefractionCenter) {
  for (DomeModel model : {DomeModel::kThin, DomeModel::kThick}) {
    const CameraRig rig = ReferenceRig({0.001, -0.002, -0.01}, model);
    const Eigen::Vector3d point = -2.0 * rig.v_off.normalized();
    const Eigen::Vector2d center = *ComputeRefractionAxis(rig).EuclideanCenter();
    EXPECT_LT((Project(rig, point).pixel - center).norm(), 1e-9);
  }
}

TEST(Projection, PointInsideDomeRejected) {
  const CameraRig rig = ReferenceRig({0, 0, -0.01}, DomeModel::kThin);
  ExpectCode(ErrorCode::kInvalidArgument,
             [&] { ProjectThinAnalytic(rig, {0.0, 0.0, 0.03}); });
  ExpectCode(ErrorCode::kInvalidArgument,
             [&] { ProjectThickIterative(ReferenceRig({0, 0, -0.01}), {0, 0, 0.053}); });
  ExpectCode(ErrorCode::kInvalidArgument,
             [&] { ProjectThickIterative(rig, {0.0, 0.0, 1.0}); });
}

TEST(Projection, DispatchFollowsModel) {
  Rng rng(25);
  const CameraRig thin = ReferenceRig({0.002, 0.001, 0.003}, DomeModel::kThin);
  const CameraRig thick = ReferenceRig({0.002, 0.001, 0.003}, DomeModel::kThick);
  const Eigen::Vector3d point = testing::RandomScenePoint(thick, rng, 1.0, 2.0).point;
  EXPECT_EQ(Project(thin, point).pixel, ProjectThinAnalytic(thin, point).pixel);
  EXPECT_EQ(Project(thick, point).pixel, ProjectThickIterative(thick, point).pixel);
}

TEST(Projection, Deterministic) {
  Rng rng(26);
  const CameraRig rig = testing::RandomRig(rng, DomeModel::kThick);
  const Eigen::Vector3d point = testing::RandomScenePoint(rig, rng, 1.0, 2.0).point;
  const Eigen::Vector2d first = Project(rig, point).pixel;
  for (int i = 0; i < 5; ++i) EXPECT_EQ(Project(rig, point).pixel, first);
}

TEST(Projection, RoundTrip) {
  Rng rng(27);
  for (int i = 0; i < 400; ++i) {
    const DomeModel model = i % 2 == 0 ? DomeModel::kThin : DomeModel::kThick;
    const CameraRig rig = testing::RandomRig(rng, model);
    const testing::ScenePoint scene = testing::RandomScenePoint(rig, rng, 0.3, 8.0);
    const Eigen::Vector2d pixel = Project(rig, scene.point).pixel;
    const LightPath path = BackProject(rig, pixel);
    EXPECT_LT(testing::LineDistance(path.water_segment, scene.point), 1e-9);
  }
}

TEST(Projection, RefractionCenterInAirAndRefractedAreCollinear) {
  Rng rng(28);
  for (int i = 0; i < 400; ++i) {
    const DomeModel model = i % 2 == 0 ? DomeModel::kThin : DomeModel::kThick;
    const CameraRig rig = testing::RandomRig(rng, model);
    const testing::ScenePoint scene = testing::RandomScenePoint(rig, rng, 0.3, 8.0);
    const Eigen::Matrix3d k_inverse = rig.intrinsics.KInverse();
    const Eigen::Vector3d r = k_inverse * ComputeRefractionAxis(rig).refraction_center_px;
    const Eigen::Vector3d a = k_inverse * ProjectInAir(rig, scene.point).homogeneous();
    const Eigen::Vector3d b = k_inverse * Project(rig, scene.point).pixel.homogeneous();
    EXPECT_LT(HomogeneousDeterminant(r, a, b), 1e-8);
  }
}

// Displacement relative to the refraction centre: positive along the ray
// from r to the in-air pixel means outward.
double RadialDisplacement(const CameraRig& rig, const Eigen::Vector3d& point) {
  const Eigen::Vector2d r = *ComputeRefractionAxis(rig).EuclideanCenter();
  const Eigen::Vector2d in_air = ProjectInAir(rig, point);
  const Eigen::Vector2d refracted = Project(rig, point).pixel;
  return (refracted - in_air).dot((in_air - r).normalized());
}

TEST(Projection, BackwardDecenteringIsBarrel) {
  Rng rng(29);
  for (DomeModel model : {DomeModel::kThin, DomeModel::kThick}) {
    const CameraRig rig = ReferenceRig({0.002, -0.001, -0.004}, model);
    ASSERT_GT(ComputeRefractionAxis(rig).refraction_center_px.z(), 0.0);
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector3d point =
          PinholePoint(rig, testing::RandomPixel(rig, rng, 100.0), rng.Uniform(0.5, 3.0));
      EXPECT_LT(RadialDisplacement(rig, point), 0.0);
    }
  }
}

TEST(Projection, ForwardDecenteringIsPincushion) {
  Rng rng(30);
  for (DomeModel model : {DomeModel::kThin, DomeModel::kThick}) {
    const CameraRig rig = ReferenceRig({0.002, -0.001, 0.004}, model);
    ASSERT_LT(ComputeRefractionAxis(rig).refraction_center_px.z(), 0.0);
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector3d point =
          PinholePoint(rig, testing::RandomPixel(rig, rng, 100.0), rng.Uniform(0.5, 3.0));
      EXPECT_GT(RadialDisplacement(rig, point), 0.0);
    }
  }
}

TEST(Projection, DisplacementDependsOnDepth) {
  for (DomeModel model : {DomeModel::kThin, DomeModel::kThick}) {
    const CameraRig rig = ReferenceRig({0.0, 0.002, -0.001}, model);
    for (const Eigen::Vector2d& pixel :
         {Eigen::Vector2d(300, 200), Eigen::Vector2d(1800, 1300)}) {
      const Eigen::Vector3d near = PinholePoint(rig, pixel, 1.0);
      const Eigen::Vector3d far = PinholePoint(rig, pixel, 10.0);
      const double near_shift = (Project(rig, near).pixel - pixel).norm();
      const double far_shift = (Project(rig, far).pixel - pixel).norm();
      EXPECT_GT(std::abs(near_shift - far_shift), 1e-3 * near_shift);
    }
  }
}

TEST(ThinDomePolynomial, VanishesAtTracedRefractionPoint) {
  Rng rng(31);
  for (int i = 0; i < 500; ++i) {
    const CameraRig rig = testing::RandomRig(rng, DomeModel::kThin);
    const testing::ScenePoint scene = testing::RandomScenePoint(rig, rng, 0.2, 5.0);
    const LightPath path = BackProject(rig, scene.pixel);
    const double radius = rig.dome.inner_radius;
    const Eigen::Vector3d z1 = rig.v_off.normalized();
    const Eigen::Vector3d x = scene.point;
    const double ux = (x - x.dot(z1) * z1).norm() / radius;
    const double uy = x.dot(z1) / radius;
    const double d = rig.v_off.norm() / radius;
    const double eta = rig.media.mu_air / rig.media.mu_water;
    const double y = path.inner_point.dot(z1) / radius;
    const std::array<double, 7> c = ThinDomePolynomial(ux, uy, d, eta);
    double scale = 0.0;
    for (int k = 0; k < 7; ++k) scale += std::abs(c[k] * std::pow(y, k));
    EXPECT_LT(std::abs(EvaluatePolynomial(c, y)), 1e-9 * scale);

    // The unsquared relation holds with the positive in-plane abscissa.
    const ThinDomeHalfPolynomials half = ThinDomeHalfPolynomial(ux, uy, d, eta);
    const double m_x = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double p = EvaluatePolynomial(half.p, y);
    const double q = EvaluatePolynomial(half.q, y);
    EXPECT_LT(std::abs(p + m_x * q), 1e-9 * (std::abs(p) + std::abs(m_x * q) + 1e-300));
  }
}

TEST(PlaneOfRefraction, Frame) {
  const CameraRig rig = ReferenceRig({0.0, 0.003, 0.004});
  const Eigen::Vector3d point(0.3, -0.2, 1.5);
  const PlaneOfRefraction plane = MakePlaneOfRefraction(rig, point);
  EXPECT_NEAR(plane.d, 0.005, 1e-15);
  EXPECT_NEAR(plane.z1_axis.dot(plane.z2_axis), 0.0, 1e-15);
  EXPECT_GE(plane.point_2d.x(), 0.0);
  EXPECT_NEAR((plane.ToWorld(plane.point_2d) - point).norm(), 0.0, 1e-14);
  ExpectCode(ErrorCode::kDegenerate, [&] {
    MakePlaneOfRefraction(ReferenceRig(Eigen::Vector3d::Zero()), point);
  });
  ExpectCode(ErrorCode::kDegenerate,
             [&] { MakePlaneOfRefraction(rig, 3.0 * rig.v_off); });
}

}  // namespace
}  // namespace domeport

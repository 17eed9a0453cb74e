#include "radvote/error.hpp"
#include "radvote/metrics.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace radvote;
using radvote::testing::random_points;
using radvote::testing::random_transform;

TEST(Add, ZeroAndPureTranslation) {
  std::mt19937_64 rng(1);
  const PointCloud model(random_points(100, rng));
  const RigidTransform gt = random_transform(rng);
  EXPECT_EQ(add_metric(model, gt, gt), 0.0);
  const RigidTransform shifted = gt * RigidTransform(Eigen::Matrix3d::Identity(), Point3(0.01, 0, 0));
  EXPECT_NEAR(add_metric(model, gt, shifted), 0.01, 1e-15);
  const PointCloud unit({Point3(0, 0, 0), Point3(1, 0, 0)});
  EXPECT_EQ(add_metric(unit, RigidTransform(), RigidTransform(Eigen::Matrix3d::Identity(), Point3(0.01, 0, 0))), 0.01);
}

TEST(Add, MatchesPerPointSummation) {
  std::mt19937_64 rng(2);
  const PointCloud model(random_points(100, rng));
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform gt = random_transform(rng), est = random_transform(rng);
    double s = 0.0;
    for (const auto& p : model.points) s += (gt.rotation() * p + gt.translation() - est.rotation() * p - est.translation()).norm();
    EXPECT_NEAR(add_metric(model, gt, est), s / 100.0, 1e-12);
  }
}

TEST(AddS, DominatedByAddAndMatchesBruteForce) {
  std::mt19937_64 rng(3);
  const PointCloud model(random_points(150, rng));
  for (int trial = 0; trial < 50; ++trial) {
    const RigidTransform gt = random_transform(rng), est = random_transform(rng, 0.2);
    const double adds = add_s_metric(model, gt, est);
    EXPECT_LE(adds, add_metric(model, gt, est));
    double s = 0.0;
    for (const auto& p : model.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : model.points) best = std::min(best, (gt * p - est * q).norm());
      s += best;
    }
    EXPECT_NEAR(adds, s / 150.0, 1e-12);
  }
  const RigidTransform gt = random_transform(rng);
  EXPECT_EQ(add_s_metric(model, gt, gt), 0.0);
}

TEST(AddS, SymmetricCircle) {
  std::vector<Point3> circle;
  const int n = 36;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * 3.14159265358979323846 * i / n;
    circle.emplace_back(std::cos(a), std::sin(a), 0.0);
  }
  const PointCloud model(circle);
  const RigidTransform gt = RigidTransform::from_axis_angle(Point3(1, 1, 0).normalized(), 0.4, Point3(1, 2, 3));
  const RigidTransform est = gt * RigidTransform::from_axis_angle(Point3::UnitZ(), 2 * 3.14159265358979323846 / n * 5);
  EXPECT_LT(add_s_metric(model, gt, est), 1e-12);
  EXPECT_GT(add_metric(model, gt, est), 0.5);
}

TEST(AddDecision, Boundary) {
  EXPECT_TRUE(add_decision(0.0, 2.0));
  EXPECT_TRUE(add_decision(0.1 * 2.0, 2.0));
  EXPECT_FALSE(add_decision(0.1 * 2.0 + 1e-12, 2.0));
  EXPECT_THROW(add_decision(0.0, 0.0), Error);
}

TEST(Auc, Oracles) {
  const std::vector<double> zeros(50, 0.0);
  EXPECT_DOUBLE_EQ(auc(zeros), 1.0);
  const std::vector<double> big(50, 0.2);
  EXPECT_DOUBLE_EQ(auc(big), 0.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  std::vector<double> uniform(10000);
  for (auto& v : uniform) v = u(rng);
  EXPECT_NEAR(auc(uniform), 0.5, 0.02);
  EXPECT_THROW(auc(std::vector<double>{}), Error);
}

TEST(Auc, StepCurveMatchesClosedForm) {
  // One value at half the range: accuracy is 0 below it and 1 above it.
  const std::vector<double> v{0.05};
  EXPECT_NEAR(auc(v, 0.1, 1000), 0.5, 1e-3);
}

TEST(Vcs, Examples) {
  RadiiMatrix gt(1, 2), est(1, 2);
  gt << 1.0, 2.0;
  est = gt;
  EXPECT_DOUBLE_EQ(vcs(est, gt, 0.1).score, 1.0);
  est(0, 1) += 0.2;
  const VcsResult r = vcs(est, gt, 0.1);
  EXPECT_DOUBLE_EQ(r.score, 0.5);
  EXPECT_EQ(r.stats.total, 2u);
  EXPECT_EQ(r.stats.correct, 1u);
  EXPECT_THROW(vcs(RadiiMatrix::Zero(2, 2), RadiiMatrix::Zero(2, 3), 0.1), Error);
}

TEST(Vcs, GaussianMatchesErf) {
  const double rho = 0.01;
  std::mt19937_64 rng(5);
  for (double sigma : {rho / 4, rho / 2, rho}) {
    std::normal_distribution<double> g(0.0, sigma);
    RadiiMatrix gt = RadiiMatrix::Constant(25000, 4, 1.0), est(25000, 4);
    for (Eigen::Index i = 0; i < est.size(); ++i) est.data()[i] = 1.0 + g(rng);
    EXPECT_NEAR(vcs(est, gt, rho).score, std::erf(rho / (sigma * std::sqrt(2.0))), 0.02);
  }
}

TEST(Miou, Oracles) {
  const std::vector<int> gt{1, 1, 0, 0, 1, 0};
  EXPECT_DOUBLE_EQ(miou(gt, gt), 1.0);
  const std::vector<int> complement{0, 0, 1, 1, 0, 1};
  EXPECT_DOUBLE_EQ(miou(complement, gt), 0.0);
  EXPECT_THROW(miou(gt, std::vector<int>{1, 0}), Error);
}

TEST(Miou, HalfForegroundFlipped) {
  // 100 foreground, 100 background; 50 foreground predicted as background.
  std::vector<int> gt(200, 0), pred(200, 0);
  for (int i = 0; i < 100; ++i) gt[static_cast<std::size_t>(i)] = 1;
  for (int i = 0; i < 50; ++i) pred[static_cast<std::size_t>(i)] = 1;
  // TP=50 FN=50 FP=0 TN=100: IoU_fg = 50/100, IoU_bg = 100/150.
  EXPECT_NEAR(miou(pred, gt), 0.5 * (0.5 + 100.0 / 150.0), 1e-15);
}

#include "wdro/error.hpp"
#include "wdro/inference.hpp"
#include "wdro/model.hpp"
#include "wdro/rng.hpp"
#include "wdro/simlab.hpp"

#include "../oracles/normal_quantile.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace wdro;

namespace {

CostSpec pinned_response() {
  CostSpec c;
  c.regression_weight = kInf;
  return c;
}

Matrix regression_data(std::uint64_t seed, std::size_t n) {
  RegressionSpec spec;
  spec.rho = 0.4;
  return generate_regression(spec, n, seed, 0);
}

}  // namespace

TEST(Region, EllipsoidInsideHalfspacesWithTightSupport) {
  const Matrix rows = regression_data(61, 100);
  RegionOptions opts;
  opts.directions = 2000;
  opts.seed = 62;
  const RegionResult r = build_region(RegressionModel(2), rows, pinned_response(), opts);
  ASSERT_TRUE(r.ellipsoid.has_value());
  EXPECT_LE(ellipsoid_halfspace_ratio(r.halfspaces, *r.ellipsoid), 1.0 + 1e-9);
  // support function of the ellipsoid equals each bound
  for (Index i = 0; i < r.halfspaces.directions.rows(); ++i) {
    const Vector u = r.halfspaces.directions.row(i).transpose();
    const double support = std::sqrt(r.ellipsoid->level * u.dot(r.ellipsoid->shape * u));
    EXPECT_NEAR(support, r.halfspaces.bounds[i], 1e-8 * std::max(1.0, support));
  }
  // pointwise: nothing the ellipsoid accepts is rejected by the halfspaces
  SplitMix64 rng(63);
  const double reach = 3.0 * std::sqrt(r.ellipsoid->level * r.ellipsoid->shape.trace() / 100.0);
  for (int i = 0; i < 10000; ++i) {
    const Vector theta = r.halfspaces.center + reach * standard_normal_vector(rng, 2);
    if (region_contains(*r.ellipsoid, theta)) EXPECT_TRUE(region_contains(r.halfspaces, theta));
  }
}

TEST(Region, CenterInsideAndFarPointOutside) {
  const Matrix rows = regression_data(64, 100);
  const RegionResult r = build_region(RegressionModel(2), rows, pinned_response(), RegionOptions{});
  ASSERT_TRUE(r.ellipsoid.has_value());
  EXPECT_TRUE(region_contains(r.halfspaces, r.halfspaces.center));
  EXPECT_TRUE(region_contains(*r.ellipsoid, r.ellipsoid->center));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(r.ellipsoid->shape);
  for (Index j = 0; j < 2; ++j) {
    const double semi_axis = std::sqrt(r.ellipsoid->level * eig.eigenvalues()[j] / r.ellipsoid->n);
    const Vector far = r.ellipsoid->center + 2.0 * semi_axis * eig.eigenvectors().col(j);
    EXPECT_FALSE(region_contains(*r.ellipsoid, far));
    EXPECT_FALSE(region_contains(r.halfspaces, far));
    const Vector near = r.ellipsoid->center + 0.99 * semi_axis * eig.eigenvectors().col(j);
    EXPECT_TRUE(region_contains(*r.ellipsoid, near));
  }
}

TEST(Region, ZeroLevelCollapsesToTheErm) {
  const Matrix rows = regression_data(65, 50);
  const RegionResult r = build_region_with_level(RegressionModel(2), rows, pinned_response(), 0.0, 200, 66);
  EXPECT_EQ(r.halfspaces.bounds.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(region_contains(r.halfspaces, r.halfspaces.center));
  EXPECT_FALSE(region_contains(r.halfspaces, r.halfspaces.center + Vector::Constant(2, 1e-9)));
}

TEST(Region, HalfspaceApproximationTightensWithMoreDirections) {
  const Matrix rows = regression_data(67, 100);
  const RegressionModel model(2);
  double previous = kInf;
  double first = 0.0;
  for (std::size_t k : {250u, 500u, 1000u, 2000u, 4000u, 8000u}) {
    const RegionResult r = build_region_with_level(model, rows, pinned_response(), 4.6, k, 68);
    const double gap = region_ray_gap(r.halfspaces, *r.ellipsoid, 2000, 69);
    if (first == 0.0) first = gap;
    EXPECT_LE(gap, previous + 1e-15);
    previous = gap;
  }
  EXPECT_LT(previous, first / 8.0);
}

TEST(Region, NestedDirectionSetsShrink) {
  const Matrix rows = regression_data(70, 80);
  const RegressionModel model(2);
  const RegionResult coarse = build_region_with_level(model, rows, pinned_response(), 4.6, 20, 71);
  const RegionResult fine = build_region_with_level(model, rows, pinned_response(), 4.6, 200, 71);
  SplitMix64 rng(72);
  for (int i = 0; i < 5000; ++i) {
    const Vector theta = coarse.halfspaces.center + 0.5 * standard_normal_vector(rng, 2);
    if (region_contains(fine.halfspaces, theta)) EXPECT_TRUE(region_contains(coarse.halfspaces, theta));
  }
}

TEST(Region, AxesShrinkLikeRootN) {
  RegressionSpec spec;
  auto mean_axis = [&](std::size_t n) {
    double total = 0.0;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
      const Matrix rows = generate_regression(spec, n, 73, rep);
      const RegionResult r = build_region_with_level(RegressionModel(2), rows, pinned_response(), 4.6, 10, 74);
      total += std::sqrt(r.ellipsoid->shape.trace() / r.ellipsoid->n);
    }
    return total / 20.0;
  };
  EXPECT_NEAR(mean_axis(400) / mean_axis(1600), 2.0, 0.15);
}

TEST(Region, MeanModelEllipsoidIsTheCovarianceBall) {
  SplitMix64 rng(75);
  Matrix x(200, 2);
  for (Index i = 0; i < 200; ++i) x.row(i) = standard_normal_vector(rng, 2).transpose();
  const RegionResult r = build_region_with_level(MeanModel(2), x, CostSpec{}, 3.0, 50, 76);
  ASSERT_TRUE(r.ellipsoid.has_value());
  // C = I and φ̂ is isotropic, so the shape is a multiple of the identity
  const double s = r.ellipsoid->shape(0, 0);
  EXPECT_GT(s, 0.0);
  EXPECT_LT((r.ellipsoid->shape - s * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12 * s);
}

TEST(Chi2, OneDegreeQuantile) {
  for (double alpha : {0.01, 0.05, 0.1, 0.5})
    EXPECT_NEAR(chi2_1_quantile(alpha), std::pow(oracle::upper_normal_quantile(alpha / 2.0), 2), 1e-9);
}

namespace {

struct FairData {
  Matrix x;
  Vector a, y;
};

// Four points with scores 0.5, 0.75 in group (1,1) and 0.5, 0.25 in (0,1).
FairData four_points() {
  const double l3 = std::log(3.0);
  FairData d;
  d.x = (Matrix(4, 1) << 0.0, l3, 0.0, -l3).finished();
  d.a = (Vector(4) << 1, 1, 0, 0).finished();
  d.y = Vector::Ones(4);
  return d;
}

}  // namespace

// By hand: p11 = p01 = ½, group masses m11 = 0.3125, m01 = 0.1875;
// Z = (0.0625, 0.1875, 0.0625, 0.1875) with variance 0.0625²; the slope term
// averages (σ(1−σ)·2)² to 0.1953125, so β̂ = 0.0625² / (1/16) / 0.1953125 = 0.32.
TEST(Fairness, HandComputedScale) {
  const FairData d = four_points();
  const FairnessTestReport r = fairness_test(d.x, d.a, d.y, Vector::Ones(1));
  EXPECT_NEAR(r.p11, 0.5, 1e-15);
  EXPECT_NEAR(r.mean_gap, 0.25, 1e-14);
  EXPECT_NEAR(r.sigma_z_sq, 0.00390625, 1e-14);
  EXPECT_NEAR(r.beta_hat, 0.32, 1e-12);
  EXPECT_NEAR(r.threshold, 0.32 * chi2_1_quantile(0.05), 1e-12);
  EXPECT_EQ(r.reject, r.statistic > r.threshold);
  EXPECT_GT(r.statistic, 0.0);
}

TEST(Fairness, BalancedGroupsGiveZero) {
  SplitMix64 rng(77);
  Matrix x(40, 2);
  for (Index i = 0; i < 20; ++i) x.row(i) = standard_normal_vector(rng, 2).transpose();
  x.bottomRows(20) = x.topRows(20);
  Vector a(40), y = Vector::Ones(40);
  a << Vector::Ones(20), Vector::Zero(20);
  const FairnessTestReport r = fairness_test(x, a, y, (Vector(2) << 1.0, -0.5).finished());
  EXPECT_NEAR(r.mean_gap, 0.0, 1e-15);
  EXPECT_NEAR(r.statistic, 0.0, 1e-12);
  EXPECT_FALSE(r.reject);
}

TEST(Fairness, StatisticGrowsWithTheGap) {
  // group (1,1) is a copy of group (0,1) pushed along the first coordinate
  SplitMix64 rng(78);
  Matrix base(200, 2);
  for (Index i = 0; i < 100; ++i) base.row(i) = standard_normal_vector(rng, 2).transpose();
  base.bottomRows(100) = base.topRows(100);
  Vector a(200), y = Vector::Ones(200);
  a << Vector::Ones(100), Vector::Zero(100);
  const Vector theta = (Vector(2) << 1.0, -0.5).finished();
  double previous = -1.0;
  for (double shift : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8}) {
    Matrix x = base;
    x.topRows(100).col(0).array() += shift;
    const FairnessTestReport r = fairness_test(x, a, y, theta);
    EXPECT_GE(r.statistic, previous - 1e-9) << shift;
    if (shift > 0.0) EXPECT_GT(r.mean_gap, 0.0);
    previous = r.statistic;
  }
  EXPECT_GT(previous, 0.0);
}

TEST(Fairness, EmptyGroupIsReported) {
  const FairData d = four_points();
  Vector a = Vector::Ones(4);
  try {
    fairness_test(d.x, a, d.y, Vector::Ones(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyGroup);
  }
}

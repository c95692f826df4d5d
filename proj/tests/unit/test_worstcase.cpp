#include "wdro/error.hpp"
#include "wdro/model.hpp"
#include "wdro/norms.hpp"
#include "wdro/ot.hpp"
#include "wdro/rng.hpp"
#include "wdro/worstcase.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace wdro;

namespace {

Matrix gaussian_rows(SplitMix64& rng, Index n, Index d) {
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) x.row(i) = standard_normal_vector(rng, d).transpose();
  return x;
}

Matrix regression_rows(SplitMix64& rng, Index n, Index d) {
  Matrix rows(n, d + 1);
  rows.leftCols(d) = gaussian_rows(rng, n, d);
  const Vector beta = Vector::LinSpaced(d, 0.5, -0.5);
  rows.col(d) = rows.leftCols(d) * beta + 0.7 * standard_normal_vector(rng, n);
  return rows;
}

CostSpec pinned_response() {
  CostSpec c;
  c.regression_weight = kInf;
  return c;
}

// Central differences of a scalar map.
Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& at) {
  Vector g(at.size());
  const double h = 1e-6;
  for (Index i = 0; i < at.size(); ++i) {
    Vector up = at, down = at;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST(Models, DerivativesMatchFiniteDifferences) {
  SplitMix64 rng(11);
  const Index d = 3;
  std::vector<std::unique_ptr<EstimatingModel>> models;
  for (const char* name : {"regression", "mean", "portfolio"}) models.push_back(make_model(name, d));
  for (const auto& model : models) {
    for (int rep = 0; rep < 10; ++rep) {
      const Vector x = standard_normal_vector(rng, model->sample_dim());
      const Vector theta = standard_normal_vector(rng, d);
      const Vector gx = model->grad_x(x, theta);
      const Vector fx = fd_gradient([&](const Vector& z) { return model->loss(z, theta); }, x);
      EXPECT_LE((gx - fx).norm(), 1e-5 * std::max(1.0, gx.norm())) << model->name();
      const Vector ht = fd_gradient([&](const Vector& t) { return model->loss(x, t); }, theta);
      EXPECT_LE((model->h(x, theta) - ht).norm(), 1e-5 * std::max(1.0, ht.norm())) << model->name();
      const Matrix jx = model->jac_x_h(x, theta), jt = model->jac_theta_h(x, theta);
      for (Index k = 0; k < d; ++k) {
        const Vector rx = fd_gradient([&](const Vector& z) { return model->h(z, theta)[k]; }, x);
        const Vector rt = fd_gradient([&](const Vector& t) { return model->h(x, t)[k]; }, theta);
        EXPECT_LE((jx.row(k).transpose() - rx).norm(), 1e-5 * std::max(1.0, rx.norm())) << model->name();
        EXPECT_LE((jt.row(k).transpose() - rt).norm(), 1e-5 * std::max(1.0, rt.norm())) << model->name();
      }
    }
  }
}

TEST(RobustRisk, ZeroRadiusIsEmpiricalRisk) {
  SplitMix64 rng(12);
  const Matrix rows = regression_rows(rng, 30, 2);
  const RegressionModel model(2);
  const Vector theta = standard_normal_vector(rng, 2);
  const RobustRisk r = robust_risk_dual(model, rows, theta, 0.0, pinned_response());
  EXPECT_NEAR(r.value, model.empirical_risk(rows, theta), 1e-10);
  EXPECT_TRUE(std::isinf(r.lambda_star));
}

TEST(RobustRisk, NondecreasingConcaveAndAboveEmpirical) {
  SplitMix64 rng(13);
  const Matrix rows = regression_rows(rng, 40, 2);
  const RegressionModel model(2);
  const Vector theta = (Vector(2) << 0.3, -0.2).finished();
  const double base = model.empirical_risk(rows, theta);
  std::vector<double> v;
  for (int i = 0; i <= 20; ++i) v.push_back(robust_risk_dual(model, rows, theta, 0.05 * i, pinned_response()).value);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_GE(v[i], base - 1e-12);
  for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GE(v[i], v[i - 1] - 1e-12);
  for (std::size_t i = 1; i + 1 < v.size(); ++i) EXPECT_GE(v[i], 0.5 * (v[i - 1] + v[i + 1]) - 1e-9);
}

TEST(RobustRisk, MatchesGridLpOnThreeAtoms) {
  // One-dimensional portfolio-style loss ℓ = x² on a fine candidate grid.
  const Matrix atoms = (Matrix(3, 1) << -0.4, 0.1, 0.7).finished();
  const MeanModel model(1);  // ½(x − θ)² with θ = 0
  const Vector theta = Vector::Zero(1);
  const double delta = 0.05;
  Matrix grid(4001, 1);
  for (Index i = 0; i < grid.rows(); ++i) grid(i, 0) = -2.0 + 0.001 * static_cast<double>(i);
  Matrix support(grid.rows() + 3, 1);
  support << atoms, grid;
  Vector f(support.rows());
  for (Index i = 0; i < support.rows(); ++i) f[i] = model.loss(support.row(i).transpose(), theta);
  const DiscreteDistribution ref = DiscreteDistribution::empirical(atoms);
  const double lp = worstcase_expectation_dual(support, f, ref, delta, CostSpec{}).value;
  EXPECT_NEAR(robust_risk_dual(model, atoms, theta, delta, CostSpec{}).value, lp, 2e-3);
}

TEST(ClosedForms, PortfolioHandValues) {
  const Vector e1 = Vector::Unit(2, 0);
  const Vector mean = (Vector(2) << 0.1, 0.2).finished();
  EXPECT_DOUBLE_EQ(wc_portfolio_return(e1, mean, 0.0, 2.0), -0.1);
  EXPECT_NEAR(wc_portfolio_return(e1, mean, 4.0, 2.0), 1.9, 1e-15);
}

TEST(ClosedForms, VarianceHandValues) {
  EXPECT_NEAR(wc_variance(Vector::Unit(3, 1), 2.0, 0.0, 2.0), 4.0, 1e-15);
  EXPECT_NEAR(wc_variance(Vector::Unit(3, 1), 2.0, 1.0, 2.0), 9.0, 1e-15);
  SplitMix64 rng(14);
  for (int i = 0; i < 20; ++i) {
    const Vector theta = standard_normal_vector(rng, 3);
    EXPECT_GE(wc_variance(theta, 0.8, 0.3, 1.0), 0.64);
  }
}

TEST(ClosedForms, RegressionZeroRadiusIsMse) {
  SplitMix64 rng(15);
  const Matrix rows = regression_rows(rng, 25, 2);
  const Vector theta = standard_normal_vector(rng, 2);
  const RegressionModel model(2);
  EXPECT_NEAR(wc_regression_risk(theta, rows, 0.0, 2.0, kInf), model.empirical_risk(rows, theta), 1e-12);
}

TEST(ClosedForms, AgreeWithGenericDual) {
  SplitMix64 rng(16);
  std::uniform_real_distribution<double> rad(0.01, 1.0);
  const Matrix x = gaussian_rows(rng, 30, 3);
  const Matrix rows = regression_rows(rng, 30, 3);
  const Vector mean = x.colwise().mean().transpose();
  for (int i = 0; i < 30; ++i) {
    const Vector theta = standard_normal_vector(rng, 3);
    const double delta = rad(rng);
    CostSpec cost;
    cost.q = i % 3 == 0 ? 1.0 : (i % 3 == 1 ? 2.0 : 3.0);
    const double p = conjugate_exponent(cost.q);
    EXPECT_NEAR(robust_risk_dual(PortfolioModel(3), x, theta, delta, cost).value,
                wc_portfolio_return(theta, mean, delta, p), 1e-9);
    const Vector proj = x * theta;
    const double s = std::sqrt((proj.array() - proj.mean()).square().mean());
    EXPECT_NEAR(robust_variance_dual(x, theta, delta, cost).value, wc_variance(theta, s, delta, p), 1e-8);
    CostSpec rc = cost;
    rc.regression_weight = 1.5;
    EXPECT_NEAR(robust_risk_dual(RegressionModel(3), rows, theta, delta, rc).value,
                wc_regression_risk(theta, rows, delta, p, 1.5), 1e-8);
  }
}

TEST(ClosedForms, HolderDirectionAttainsPortfolioWorstCase) {
  SplitMix64 rng(17);
  const Matrix x = gaussian_rows(rng, 20, 3);
  const Vector mean = x.colwise().mean().transpose();
  for (double p : {1.5, 2.0, 3.0}) {
    const double q = conjugate_exponent(p);
    const Vector theta = standard_normal_vector(rng, 3);
    const double delta = 0.25;
    const Vector dir = holder_maximizer(theta, p);
    EXPECT_NEAR(lp_norm(dir, q), lp_norm(theta, p), 1e-12);
    // shifting every sample by s spends exactly δ and attains the closed form
    const Vector s = -std::sqrt(delta) * dir / lp_norm(theta, p);
    EXPECT_NEAR(lp_norm(s, q) * lp_norm(s, q), delta, 1e-12);
    EXPECT_NEAR(-theta.dot(mean + s), wc_portfolio_return(theta, mean, delta, p), 1e-9);
  }
}

TEST(Variation, ConstantAndPortfolioCases) {
  SplitMix64 rng(18);
  const Matrix x = gaussian_rows(rng, 10, 3);
  const Vector theta = standard_normal_vector(rng, 3);
  for (double p : {1.0, 2.0, kInf}) EXPECT_NEAR(variation_norm(PortfolioModel(3), x, theta, p), lp_norm(theta, p), 1e-12);
  EXPECT_NEAR(variation_norm(MeanModel(3), x.rowwise().mean().replicate(1, 3), Vector::Zero(3), 2.0),
              std::sqrt((x.rowwise().mean().replicate(1, 3)).rowwise().squaredNorm().mean()), 1e-12);
  const Matrix same = Matrix::Zero(5, 3);
  EXPECT_NEAR(variation_norm(MeanModel(3), same, Vector::Zero(3), 2.0), 0.0, 1e-15);
}

TEST(Variation, RegressionMatchesDirectFormula) {
  SplitMix64 rng(19);
  const Matrix rows = regression_rows(rng, 30, 2);
  const RegressionModel model(2);
  const Vector theta = standard_normal_vector(rng, 2);
  for (double p : {1.0, 2.0}) {
    double total = 0.0;
    for (Index i = 0; i < rows.rows(); ++i) {
      const Vector z = rows.row(i).transpose();
      const Vector g = fd_gradient([&](const Vector& v) { return model.loss(v, theta); }, z);
      total += std::pow(lp_norm(g, p), 2);
    }
    EXPECT_NEAR(variation_norm(model, rows, theta, p), std::sqrt(total / rows.rows()), 1e-6);
  }
}

TEST(Expansion, PortfolioResidualVanishes) {
  SplitMix64 rng(20);
  const Matrix x = gaussian_rows(rng, 30, 3);
  const auto rows = expansion_check(PortfolioModel(3), x, Vector::Constant(3, 0.3), CostSpec{}, {0.0, 1e-2, 1e-4, 0.5});
  for (const auto& r : rows) EXPECT_NEAR(r.residual, 0.0, 1e-10);
  EXPECT_EQ(rows.front().residual, 0.0);
}

TEST(Expansion, RegressionRatioStaysBounded) {
  SplitMix64 rng(21);
  const Matrix rows = regression_rows(rng, 60, 2);
  const Vector theta = (Vector(2) << 0.2, 0.4).finished();
  const auto out = expansion_check(RegressionModel(2), rows, theta, pinned_response(), {1e-2, 1e-3, 1e-4, 1e-5, 1e-6});
  const double c = std::abs(out.front().ratio);
  for (const auto& r : out) EXPECT_LE(std::abs(r.ratio), 2.0 * c + 1e-6);
  // with a pinned response the expansion is exact at second order: ratio = ‖θ‖²
  for (const auto& r : out) EXPECT_NEAR(r.ratio, theta.squaredNorm(), 1e-4);
}

TEST(RobustRisk, UnboundedInnerSupIsReported) {
  // r = 1 cost with the quadratic regression loss grows faster than the cost.
  SplitMix64 rng(22);
  const Matrix rows = regression_rows(rng, 10, 1);
  CostSpec cost = pinned_response();
  cost.r = 1.0;
  try {
    robust_risk_dual(RegressionModel(1), rows, Vector::Ones(1), 0.1, cost);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::InnerSupUnboundedForAllLambda || e.code() == ErrorCode::Unsupported);
  }
}

#include "wdro/error.hpp"
#include "wdro/model.hpp"
#include "wdro/norms.hpp"
#include "wdro/optim.hpp"
#include "wdro/radius.hpp"
#include "wdro/rng.hpp"
#include "wdro/simlab.hpp"

#include "../oracles/ks.hpp"
#include "../oracles/normal_quantile.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace wdro;

namespace {

CostSpec pinned_response(double q = 2.0) {
  CostSpec c;
  c.q = q;
  c.regression_weight = kInf;
  return c;
}

Matrix regression_data(std::uint64_t seed, std::size_t n, double rho = 0.3) {
  RegressionSpec spec;
  spec.rho = rho;
  return generate_regression(spec, n, seed, 0);
}

}  // namespace

TEST(PhiHat, ZeroAndIdentityJacobian) {
  SplitMix64 rng(41);
  Matrix x(20, 3);
  for (Index i = 0; i < 20; ++i) x.row(i) = standard_normal_vector(rng, 3).transpose();
  const Vector xi = standard_normal_vector(rng, 3);
  EXPECT_EQ(phi_hat(Vector::Zero(3), Vector::Zero(3), MeanModel(3), x, 2.0), 0.0);
  EXPECT_NEAR(phi_hat(xi, Vector::Zero(3), MeanModel(3), x, 2.0), xi.squaredNorm() / 4.0, 1e-14);
}

// With h = −2ex the integrand is ‖2(eξ − (ξᵀx)θ)‖², so ¼ of its mean is
// mean ‖eξ − (ξᵀx)θ‖_p².
TEST(PhiHat, RegressionIntegrand) {
  const Matrix rows = regression_data(42, 30);
  SplitMix64 rng(43);
  for (double p : {1.0, 2.0, 3.0}) {
    const Vector theta = standard_normal_vector(rng, 2), xi = standard_normal_vector(rng, 2);
    double total = 0.0;
    for (Index i = 0; i < rows.rows(); ++i) {
      const Vector x = rows.row(i).head(2).transpose();
      const double e = rows(i, 2) - theta.dot(x);
      total += std::pow(lp_norm(e * xi - xi.dot(x) * theta, p), 2);
    }
    const double got = phi_hat(xi, theta, RegressionModel(2), rows, pinned_response(conjugate_exponent(p)));
    EXPECT_NEAR(got, total / rows.rows(), 1e-10 * total);
  }
}

TEST(PhiStar, ClosedFormCases) {
  SplitMix64 rng(44);
  Matrix x(50, 3);
  for (Index i = 0; i < 50; ++i) x.row(i) = standard_normal_vector(rng, 3).transpose();
  const LimitLaw law = build_limit_law(MeanModel(3), x, Vector::Zero(3), CostSpec{});
  const Vector z = standard_normal_vector(rng, 3);
  EXPECT_EQ(phi_star(Vector::Zero(3), law), 0.0);
  EXPECT_NEAR(phi_star(z, law), z.squaredNorm(), 1e-12);
}

TEST(PhiStar, NumericMatchesClosedFormAndFenchelYoung) {
  const Matrix rows = regression_data(45, 60);
  const RegressionModel model(2);
  const LimitLaw law = build_limit_law(model, rows, model.fit_erm(rows), pinned_response());
  SplitMix64 rng(46);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector z = standard_normal_vector(rng, 2);
    const double closed = phi_star(z, law);
    EXPECT_NEAR(phi_star_numeric(z, law), closed, 1e-6 * std::max(1.0, closed));
    const Vector xi = 3.0 * standard_normal_vector(rng, 2);
    EXPECT_LE(xi.dot(z), phi_hat(xi, law) + closed + 1e-9);
  }
}

TEST(PhiStar, BiconjugateReturnsPhi) {
  const Matrix rows = regression_data(47, 60);
  const RegressionModel model(2);
  const LimitLaw law = build_limit_law(model, rows, model.fit_erm(rows), pinned_response());
  const ValueGrad star = [&](const Vector& z, Vector& grad) {
    grad = 2.0 * law.a_inverse * z;
    return phi_star(z, law);
  };
  for (double a = -2.0; a <= 2.0; a += 0.5)
    for (double b = -2.0; b <= 2.0; b += 0.5) {
      const Vector xi = (Vector(2) << a, b).finished();
      const double back = numeric_conjugate(star, xi, Vector::Zero(2)).value;
      EXPECT_NEAR(back, phi_hat(xi, law), 1e-5);
    }
}

TEST(PhiStar, NumericModeForNonEuclideanCost) {
  const Matrix rows = regression_data(48, 40);
  const RegressionModel model(2);
  const LimitLaw law = build_limit_law(model, rows, model.fit_erm(rows), pinned_response(1.5));
  EXPECT_EQ(law.mode, ConjugateMode::Numeric);
  SplitMix64 rng(49);
  for (int rep = 0; rep < 5; ++rep) {
    const Vector z = standard_normal_vector(rng, 2), xi = standard_normal_vector(rng, 2);
    EXPECT_LE(xi.dot(z), phi_hat(xi, law) + phi_star(z, law) + 1e-9);
  }
}

TEST(Radius, MeanModelChiSquareQuantile) {
  SplitMix64 rng(50);
  Matrix x(5000, 3);
  for (Index i = 0; i < x.rows(); ++i) x.row(i) = standard_normal_vector(rng, 3).transpose();
  const RadiusEstimate r = estimate_radius(MeanModel(3), x, 0.1, 100000, 51, CostSpec{});
  const double want = oracle::chi2_3_quantile(0.9);
  EXPECT_LT(std::abs(r.quantile.eta - want) / want, 0.02);
  EXPECT_EQ(r.quantile.quantile_index, 90000u);
  EXPECT_DOUBLE_EQ(r.delta, r.quantile.eta / 5000.0);
}

TEST(Radius, QuantileIndexAndDefaults) {
  EXPECT_EQ(quantile_index(1000, 0.1), 900u);
  EXPECT_EQ(quantile_index(1000, 0.05), 950u);
  EXPECT_EQ(quantile_index(7, 0.5), 4u);
  EXPECT_EQ(default_draws(0.1), 1000u);
  EXPECT_EQ(default_draws(0.01), 5000u);
}

TEST(Radius, MonotoneInAlphaAndDeterministic) {
  const Matrix rows = regression_data(52, 100);
  const RegressionModel model(2);
  double previous = kInf;
  for (double alpha : {0.01, 0.05, 0.1, 0.3, 0.6, 0.99}) {
    const double delta = estimate_radius(model, rows, alpha, 2000, 53, pinned_response()).delta;
    EXPECT_LE(delta, previous);
    previous = delta;
  }
  const auto sample = limit_law_sample(build_limit_law(model, rows, model.fit_erm(rows), pinned_response()),
                                       estimate_radius(model, rows, 0.1, 10, 1, pinned_response()).sigma, 2000, 53);
  EXPECT_EQ(estimate_radius(model, rows, 0.99, 2000, 53, pinned_response()).quantile.eta, sample[19]);

  setenv("WDRO_THREADS", "1", 1);
  const double one = estimate_radius(model, rows, 0.1, 5000, 54, pinned_response()).quantile.eta;
  setenv("WDRO_THREADS", "3", 1);
  const double three = estimate_radius(model, rows, 0.1, 5000, 54, pinned_response()).quantile.eta;
  unsetenv("WDRO_THREADS");
  EXPECT_EQ(one, three);
}

TEST(Radius, ScalesLikeOneOverN) {
  RegressionSpec spec;
  double first = 0.0;
  for (std::size_t n : {500u, 2000u, 8000u}) {
    const Matrix rows = generate_regression(spec, n, 55, 0);
    const RadiusEstimate r = estimate_radius(RegressionModel(2), rows, 0.1, 20000, 56, pinned_response());
    const double scaled = r.delta * static_cast<double>(n);
    if (first == 0.0) first = scaled;
    EXPECT_NEAR(scaled, first, 0.1 * first);
  }
}

// Population law of the regression statistic: Σ = 4σ²Ξ and A = 4(σ²I + ‖θ‖²Ξ)
// turn HᵀA⁻¹H into Σ_i D_i/(1 + D_i‖θ‖²/σ²) N_i² with D the eigenvalues of Ξ.
TEST(Radius, RegressionLawIsGeneralizedChiSquare) {
  RegressionSpec spec;
  spec.rho = 0.6;
  spec.theta_star = (Vector(2) << 0.8, -0.3).finished();
  spec.sigma2 = 1.5;
  const Matrix xi = spec.xi();
  LimitLaw law;
  law.p = 2.0;
  law.A = 4.0 * (spec.sigma2 * Matrix::Identity(2, 2) + spec.theta_star.squaredNorm() * xi);
  law.a_inverse = law.A.inverse();
  law.sigma = 4.0 * spec.sigma2 * xi;
  law.mode = ConjugateMode::ClosedForm;
  const auto sampled = limit_law_sample(law, law.sigma, 100000, 57);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(xi);
  const auto eigen_form = genchisq_sample(eig.eigenvalues(), spec.theta_star.squaredNorm(), spec.sigma2, 100000, 58);
  EXPECT_LT(oracle::ks_statistic(sampled, eigen_form), oracle::ks_critical(100000, 100000, 0.01));
}

TEST(GenChiSquare, LimitsAndMoments) {
  const auto chi1 = genchisq_sample(Vector::Ones(1), 0.0, 1.0, 1000000, 59);
  std::vector<double> sorted = chi1;
  std::sort(sorted.begin(), sorted.end());
  const double q95 = sorted[static_cast<std::size_t>(0.95 * sorted.size()) - 1];
  const double want = std::pow(oracle::upper_normal_quantile(0.025), 2);
  EXPECT_NEAR(q95, want, 0.03);

  const auto collapsed = genchisq_sample(Vector::Ones(2), 1e12, 1.0, 1000, 60);
  for (double v : collapsed) EXPECT_LT(v, 1e-9);

  const auto weighted = genchisq_sample((Vector(2) << 0.3, 1.2).finished(), 0.0, 1.0, 200000, 61);
  double mean = 0.0;
  for (double v : weighted) mean += v;
  mean /= weighted.size();
  EXPECT_NEAR(mean, 1.5, 0.02);
}

TEST(HighDim, HandValueAndScaling) {
  const double oracle_value = M_PI / (M_PI - 2.0) * oracle::upper_normal_quantile(0.05 / 20.0) / 10.0;
  const HighDimRadius r = sqrt_lasso_radius(100, 10, 0.05);
  EXPECT_NEAR(r.sqrt_delta, oracle_value, 1e-12);
  EXPECT_NEAR(r.sqrt_delta, 0.7725, 1e-4);
  EXPECT_NEAR(r.delta, r.sqrt_delta * r.sqrt_delta, 1e-15);
  EXPECT_FALSE(r.alpha_out_of_range);
  EXPECT_NEAR(sqrt_lasso_radius(400, 10, 0.05).sqrt_delta, 0.5 * r.sqrt_delta, 1e-15);
  EXPECT_TRUE(sqrt_lasso_radius(100, 10, 0.2).alpha_out_of_range);
}

TEST(NormalQuantile, AgreesWithBisectionOracle) {
  for (double p : {1e-12, 1e-6, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999999})
    EXPECT_NEAR(normal_quantile(p), oracle::normal_quantile(p), 1e-9) << p;
  for (double q : {1e-15, 1e-9, 1e-4, 0.05})
    EXPECT_NEAR(normal_upper_quantile(q), oracle::upper_normal_quantile(q), 1e-9) << q;
}

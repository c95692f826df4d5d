#include "wdro/worstcase.hpp"

#include "wdro/error.hpp"
#include "wdro/norms.hpp"
#include "wdro/optim.hpp"
#include "wdro/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace wdro {

RobustRisk robust_risk_dual(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                            double delta, const CostSpec& cost) {
  require(samples.rows() > 0, "empty sample");
  require(samples.cols() == model.sample_dim(), "sample dimension does not match the model");
  require(theta.size() == model.param_dim(), "theta dimension does not match the model");
  require(delta >= 0.0 && std::isfinite(delta), "delta must be a finite nonnegative number");
  cost.validate(samples.cols());
  if (!model.has_inner_sup(cost))
    fail(ErrorCode::Unsupported, model.name() + ": no closed-form inner supremum for this cost");

  RobustRisk out;
  out.delta = delta;
  if (delta == 0.0) {
    out.value = model.empirical_risk(samples, theta);
    out.lambda_star = kInf;
    return out;
  }

  const Index n = samples.rows();
  auto g = [&](double lambda) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double v = model.inner_sup(samples.row(i).transpose(), theta, lambda, cost);
      if (!std::isfinite(v)) return kInf;
      total += v;
    }
    return lambda * delta + total / static_cast<double>(n);
  };

  const double threshold = model.lambda_threshold(theta, cost);
  if (!std::isfinite(threshold))
    fail(ErrorCode::InnerSupUnboundedForAllLambda, "inner supremum is infinite for every lambda");
  double lambda = std::max(1.0, 2.0 * threshold);
  double value = g(lambda);
  for (int it = 0; it < 200 && !std::isfinite(value); ++it) {
    lambda *= 2.0;
    value = g(lambda);
  }
  if (!std::isfinite(value))
    fail(ErrorCode::InnerSupUnboundedForAllLambda, "inner supremum is infinite for every lambda");
  for (int it = 0; it < 2000; ++it) {
    const double next = g(2.0 * lambda);
    if (!(next < value)) break;
    lambda *= 2.0;
    value = next;
  }
  const ScalarMinimum best = golden_section_minimize(g, threshold, 2.0 * lambda, 1e-14);
  out.value = best.value;
  out.lambda_star = best.x;
  return out;
}

double wc_portfolio_return(const Vector& theta, const Vector& sample_mean, double delta, double p) {
  require(delta >= 0.0, "delta must be nonnegative");
  return -theta.dot(sample_mean) + std::sqrt(delta) * lp_norm(theta, p);
}

double wc_variance(const Vector& theta, double sample_std, double delta, double p) {
  require(sample_std >= 0.0, "sample standard deviation must be nonnegative");
  require(delta >= 0.0, "delta must be nonnegative");
  const double s = sample_std + std::sqrt(delta) * lp_norm(theta, p);
  return s * s;
}

double wc_regression_risk(const Vector& theta, const Matrix& samples, double delta, double p, double a) {
  require(delta >= 0.0, "delta must be nonnegative");
  require(a > 0.0, "a must be positive");
  const Index d = theta.size();
  require(samples.cols() == d + 1, "sample rows must be (x, y)");
  const Vector e = samples.col(d) - samples.leftCols(d) * theta;
  const double rmse = std::sqrt(e.squaredNorm() / static_cast<double>(samples.rows()));
  double penalty;
  if (std::isinf(a)) {
    penalty = lp_norm(theta, p);
  } else {
    Vector extended(d + 1);
    extended << theta, 1.0 / std::sqrt(a);
    penalty = lp_norm(extended, p);
  }
  const double s = rmse + std::sqrt(delta) * penalty;
  return s * s;
}

RobustRisk robust_variance_dual(const Matrix& samples, const Vector& theta, double delta, const CostSpec& cost) {
  const Index d = theta.size();
  require(samples.cols() == d, "sample dimension does not match theta");
  cost.validate(d);
  require(!cost.regression_weight, "robust_variance_dual: cost acts on the returns only");
  // Rows (x, m) with m pinned by an infinite weight on the appended column.
  CostSpec augmented = cost;
  Vector w = cost.effective_weights(d);
  augmented.coord_weights.resize(d + 1);
  augmented.coord_weights << w, kInf;

  const RegressionModel model(d);
  const Vector proj = samples * theta;
  Matrix rows(samples.rows(), d + 1);
  rows.leftCols(d) = samples;
  auto risk_at = [&](double m) {
    rows.col(d).setConstant(m);
    return robust_risk_dual(model, rows, theta, delta, augmented);
  };
  const ScalarMinimum best = golden_section_minimize(
      [&](double m) { return risk_at(m).value; }, proj.minCoeff(), proj.maxCoeff(), 1e-12);
  RobustRisk out = risk_at(best.x);
  return out;
}

double variation_norm(const EstimatingModel& model, const Matrix& samples, const Vector& theta, double p) {
  double total = 0.0;
  for (Index i = 0; i < samples.rows(); ++i) {
    const double g = lp_norm(model.grad_x(samples.row(i).transpose(), theta), p);
    total += g * g;
  }
  return std::sqrt(total / static_cast<double>(samples.rows()));
}

double variation_norm(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                      const CostSpec& cost) {
  const Vector w = cost.effective_weights(samples.cols());
  const double p = cost.dual_exponent();
  double total = 0.0;
  for (Index i = 0; i < samples.rows(); ++i) {
    const double g = weighted_dual_norm(model.grad_x(samples.row(i).transpose(), theta), w, p);
    total += g * g;
  }
  return std::sqrt(total / static_cast<double>(samples.rows()));
}

std::vector<ExpansionRow> expansion_check(const EstimatingModel& model, const Matrix& samples,
                                          const Vector& theta, const CostSpec& cost,
                                          const std::vector<double>& deltas) {
  require(cost.r == 2.0, "expansion_check requires r = 2");
  const double base = model.empirical_risk(samples, theta);
  const double v = variation_norm(model, samples, theta, cost);
  std::vector<ExpansionRow> rows(deltas.size());
  parallel_for(deltas.size(), [&](std::size_t i) {
    const double delta = deltas[i];
    const RobustRisk risk = robust_risk_dual(model, samples, theta, delta, cost);
    ExpansionRow& row = rows[i];
    row.delta = delta;
    row.robust_risk = risk.value;
    row.residual = delta == 0.0 ? 0.0 : risk.value - base - std::sqrt(delta) * v;
    row.ratio = delta == 0.0 ? 0.0 : row.residual / delta;
  });
  return rows;
}

}  // namespace wdro

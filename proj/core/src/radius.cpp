#include "wdro/radius.hpp"

#include "wdro/error.hpp"
#include "wdro/norms.hpp"
#include "wdro/optim.hpp"
#include "wdro/parallel.hpp"
#include "wdro/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wdro {
namespace {

Matrix scaled_jacobian(const Matrix& J, const Vector& w) {
  std::vector<Index> cols;
  for (Index j = 0; j < w.size(); ++j) {
    if (std::isinf(w[j])) continue;
    if (w[j] == 0.0) fail(ErrorCode::Unsupported, "limit law needs positive weights on movable coordinates");
    cols.push_back(j);
  }
  Matrix out(J.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Index>(c)) = J.col(cols[c]) / w[cols[c]];
  return out;
}

double phi_hat_value_grad(const Vector& xi, const LimitLaw& law, Vector* grad) {
  double total = 0.0;
  if (grad) grad->setZero(xi.size());
  for (const Matrix& J : law.jacobians) {
    const Vector v = J.transpose() * xi;
    const double norm = lp_norm(v, law.p);
    total += norm * norm;
    if (grad && norm > 0.0) *grad += norm * (J * dual_direction(v, law.p));
  }
  const double inv_n = 1.0 / static_cast<double>(law.jacobians.size());
  if (grad) *grad *= 0.5 * inv_n;
  return 0.25 * inv_n * total;
}

// Lower factor L with L Lᵀ = sigma (after a ridge when sigma is singular).
Matrix gaussian_factor(const Matrix& sigma, bool* ridge_applied) {
  const Index d = sigma.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  const double top = eig.eigenvalues().maxCoeff();
  Matrix target = sigma;
  bool ridge = false;
  if (!(top > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * top) {
    const double eps = 1e-10 * std::max(sigma.trace(), 1e-300) / static_cast<double>(d);
    target += eps * Matrix::Identity(d, d);
    ridge = true;
  }
  if (ridge_applied) *ridge_applied = ridge;
  Eigen::LLT<Matrix> llt(target);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> eig2(target);
  const Vector root = eig2.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig2.eigenvectors() * root.asDiagonal();
}

}  // namespace

LimitLaw build_limit_law(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                         const CostSpec& cost) {
  require(samples.rows() > 0, "empty sample");
  require(samples.cols() == model.sample_dim(), "sample dimension does not match the model");
  cost.validate(samples.cols());
  const Index n = samples.rows();
  const Index k = model.param_dim();
  const Vector w = cost.effective_weights(samples.cols());

  LimitLaw law;
  law.p = cost.dual_exponent();
  law.A = Matrix::Zero(k, k);
  Matrix H(n, k);
  law.jacobians.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Vector x = samples.row(i).transpose();
    law.jacobians.push_back(scaled_jacobian(model.jac_x_h(x, theta), w));
    law.A += law.jacobians.back() * law.jacobians.back().transpose();
    H.row(i) = model.h(x, theta).transpose();
  }
  law.A /= static_cast<double>(n);
  const Matrix centered = H.rowwise() - H.colwise().mean();
  law.sigma = centered.transpose() * centered / static_cast<double>(n);
  law.mode = law.p == 2.0 ? ConjugateMode::ClosedForm : ConjugateMode::Numeric;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(law.A);
  const Vector ev = eig.eigenvalues();
  const double top = ev.maxCoeff();
  Vector inv(k);
  for (Index j = 0; j < k; ++j) {
    if (top > 0.0 && ev[j] > 1e-12 * top) {
      inv[j] = 1.0 / ev[j];
    } else {
      inv[j] = 0.0;
      law.singular_a = true;
    }
  }
  law.a_inverse = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return law;
}

double phi_hat(const Vector& xi, const LimitLaw& law) { return phi_hat_value_grad(xi, law, nullptr); }

double phi_hat(const Vector& xi, const Vector& theta, const EstimatingModel& model, const Matrix& samples,
               const CostSpec& cost) {
  require(xi.size() == model.param_dim(), "xi dimension does not match the model");
  return phi_hat(xi, build_limit_law(model, samples, theta, cost));
}

double phi_hat(const Vector& xi, const Vector& theta, const EstimatingModel& model, const Matrix& samples,
               double p) {
  CostSpec cost;
  cost.q = conjugate_exponent(p);
  return phi_hat(xi, theta, model, samples, cost);
}

double phi_star_numeric(const Vector& z, const LimitLaw& law) {
  require(z.size() == law.dim(), "z dimension does not match the limit law");
  if (z.isZero(0.0)) return 0.0;
  ValueGrad phi = [&](const Vector& xi, Vector& grad) { return phi_hat_value_grad(xi, law, &grad); };
  const Vector start = 2.0 * law.a_inverse * z;
  return std::max(0.0, numeric_conjugate(phi, z, start).value);
}

double phi_star(const Vector& z, const LimitLaw& law) {
  require(z.size() == law.dim(), "z dimension does not match the limit law");
  if (law.mode == ConjugateMode::ClosedForm) return std::max(0.0, z.dot(law.a_inverse * z));
  return phi_star_numeric(z, law);
}

std::size_t default_draws(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  return std::max<std::size_t>(1000, static_cast<std::size_t>(std::ceil(50.0 / alpha)));
}

std::size_t quantile_index(std::size_t k, double alpha) {
  require(k >= 1, "need at least one draw");
  require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  const double raw = std::ceil(static_cast<double>(k) * (1.0 - alpha) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, k);
}

std::vector<double> limit_law_sample(const LimitLaw& law, const Matrix& sigma, std::size_t k, std::uint64_t seed,
                                     bool* ridge_applied) {
  const Matrix L = gaussian_factor(sigma, ridge_applied);
  const Index d = sigma.rows();
  std::vector<double> values(k);
  parallel_for(k, [&](std::size_t i) {
    SplitMix64 engine = make_stream(seed, i);
    const Vector h = L * standard_normal_vector(engine, d);
    values[i] = phi_star(h, law);
  });
  std::sort(values.begin(), values.end());
  return values;
}

RadiusEstimate estimate_radius(const EstimatingModel& model, const Matrix& samples, double alpha, std::size_t k,
                               std::uint64_t seed, const CostSpec& cost) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  require(k >= 1, "need at least one draw");
  require(samples.rows() >= model.param_dim() + 1, "need n >= d + 1 samples");
  RadiusEstimate out;
  out.theta_erm = model.fit_erm(samples);
  const LimitLaw law = build_limit_law(model, samples, out.theta_erm, cost);
  out.sigma = law.sigma;
  out.singular_a = law.singular_a;
  const std::vector<double> values = limit_law_sample(law, law.sigma, k, seed, &out.ridge_applied);
  out.quantile.alpha = alpha;
  out.quantile.k = k;
  out.quantile.seed = seed;
  out.quantile.quantile_index = quantile_index(k, alpha);
  out.quantile.eta = values[out.quantile.quantile_index - 1];
  out.delta = out.quantile.eta / static_cast<double>(samples.rows());
  return out;
}

std::vector<double> genchisq_sample(const Vector& eigenvalues, double norm_theta_sq, double sigma_sq, std::size_t k,
                                    std::uint64_t seed) {
  require((eigenvalues.array() >= 0.0).all(), "eigenvalues must be nonnegative");
  require(sigma_sq > 0.0, "sigma^2 must be positive");
  require(norm_theta_sq >= 0.0, "squared norm must be nonnegative");
  const Vector weights = eigenvalues.array() / (1.0 + eigenvalues.array() * norm_theta_sq / sigma_sq);
  std::vector<double> out(k);
  parallel_for(k, [&](std::size_t i) {
    SplitMix64 engine = make_stream(seed, i);
    const Vector z = standard_normal_vector(engine, weights.size());
    out[i] = weights.dot(z.cwiseAbs2());
  });
  return out;
}

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "probability must be in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_upper_quantile(double q) {
  require(q > 0.0 && q < 1.0, "probability must be in (0, 1)");
  return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>(), q));
}

HighDimRadius sqrt_lasso_radius(double n, double d, double alpha) {
  require(n >= 1.0 && d >= 1.0, "n and d must be at least 1");
  require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  HighDimRadius out;
  const double pi = std::numbers::pi;
  out.sqrt_delta = pi / (pi - 2.0) * normal_upper_quantile(alpha / (2.0 * d)) / std::sqrt(n);
  out.delta = out.sqrt_delta * out.sqrt_delta;
  out.alpha_out_of_range = !(alpha < 0.125);
  return out;
}

}  // namespace wdro

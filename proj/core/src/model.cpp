#include "wdro/model.hpp"

#include "wdro/error.hpp"
#include "wdro/norms.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace wdro {

double weighted_dual_norm(const Vector& v, const Vector& weights, double p) {
  std::vector<double> kept;
  for (Index j = 0; j < v.size(); ++j) {
    if (std::isinf(weights[j])) continue;
    if (weights[j] == 0.0) {
      if (v[j] != 0.0) return kInf;
      continue;
    }
    kept.push_back(v[j] / weights[j]);
  }
  if (kept.empty()) return 0.0;
  return lp_norm(Eigen::Map<const Vector>(kept.data(), static_cast<Index>(kept.size())), p);
}

double EstimatingModel::inner_sup(const Vector&, const Vector&, double, const CostSpec&) const {
  fail(ErrorCode::Unsupported, name() + ": no closed-form inner supremum for this cost");
}

double EstimatingModel::lambda_threshold(const Vector&, const CostSpec&) const { return 0.0; }

ProfileInner EstimatingModel::profile_inner(const Vector&, const Vector&, const Vector&, const CostSpec&) const {
  fail(ErrorCode::Unsupported, name() + ": profile function not available for this cost");
}

Vector EstimatingModel::fit_erm(const Matrix&) const {
  fail(ErrorCode::Unsupported, name() + ": no empirical risk minimizer");
}

double EstimatingModel::empirical_risk(const Matrix& samples, const Vector& theta) const {
  double total = 0.0;
  for (Index i = 0; i < samples.rows(); ++i) total += loss(samples.row(i).transpose(), theta);
  return total / static_cast<double>(samples.rows());
}

Vector EstimatingModel::mean_h(const Matrix& samples, const Vector& theta) const {
  Vector total = Vector::Zero(param_dim());
  for (Index i = 0; i < samples.rows(); ++i) total += h(samples.row(i).transpose(), theta);
  return total / static_cast<double>(samples.rows());
}

// ---------------------------------------------------------------- regression

namespace {

double residual(const Vector& x, const Vector& theta) {
  const Index d = theta.size();
  return x[d] - theta.dot(x.head(d));
}

}  // namespace

double RegressionModel::loss(const Vector& x, const Vector& theta) const {
  const double e = residual(x, theta);
  return e * e;
}

Vector RegressionModel::grad_x(const Vector& x, const Vector& theta) const {
  const double e = residual(x, theta);
  Vector g(d_ + 1);
  g.head(d_) = -2.0 * e * theta;
  g[d_] = 2.0 * e;
  return g;
}

Vector RegressionModel::h(const Vector& x, const Vector& theta) const {
  return -2.0 * residual(x, theta) * x.head(d_);
}

Matrix RegressionModel::jac_x_h(const Vector& x, const Vector& theta) const {
  const double e = residual(x, theta);
  Matrix J(d_, d_ + 1);
  J.leftCols(d_) = 2.0 * x.head(d_) * theta.transpose() - 2.0 * e * Matrix::Identity(d_, d_);
  J.col(d_) = -2.0 * x.head(d_);
  return J;
}

Matrix RegressionModel::jac_theta_h(const Vector& x, const Vector&) const {
  return 2.0 * x.head(d_) * x.head(d_).transpose();
}

double RegressionModel::growth_constant(const Vector& theta, const CostSpec& cost) const {
  Vector beta(d_ + 1);
  beta.head(d_) = -theta;
  beta[d_] = 1.0;
  const double s = weighted_dual_norm(beta, cost.effective_weights(d_ + 1), cost.dual_exponent());
  return s * s;
}

bool RegressionModel::has_inner_sup(const CostSpec& cost) const { return cost.r == 2.0; }

double RegressionModel::inner_sup(const Vector& x, const Vector& theta, double lambda,
                                  const CostSpec& cost) const {
  if (!has_inner_sup(cost)) return EstimatingModel::inner_sup(x, theta, lambda, cost);
  const double e = residual(x, theta);
  const double k = growth_constant(theta, cost);
  if (k == 0.0) return e * e;
  if (lambda > k) return e * e * lambda / (lambda - k);
  if (e == 0.0 && lambda == k) return 0.0;
  return kInf;
}

double RegressionModel::lambda_threshold(const Vector& theta, const CostSpec& cost) const {
  return growth_constant(theta, cost);
}

bool RegressionModel::has_profile_inner(const CostSpec& cost) const {
  return cost.q == 2.0 && cost.r == 2.0;
}

ProfileInner RegressionModel::profile_inner(const Vector& x, const Vector& theta, const Vector& lambda,
                                            const CostSpec& cost) const {
  if (!has_profile_inner(cost)) return EstimatingModel::profile_inner(x, theta, lambda, cost);
  const Index m = d_ + 1;
  const Vector w = cost.effective_weights(m);
  const double e = residual(x, theta);
  const double lx = lambda.dot(x.head(d_));

  // λᵀh(x + u) = c0 + bᵀu + uᵀSu; subtract the cost uᵀDu.
  Vector b(m);
  b.head(d_) = -2.0 * e * lambda + 2.0 * lx * theta;
  b[d_] = -2.0 * lx;
  Matrix S = Matrix::Zero(m, m);
  S.topLeftCorner(d_, d_) = theta * lambda.transpose() + lambda * theta.transpose();
  S.block(0, d_, d_, 1) = -lambda;
  S.block(d_, 0, 1, d_) = -lambda.transpose();
  const double c0 = -2.0 * e * lx;

  std::vector<Index> free;
  for (Index j = 0; j < m; ++j)
    if (!std::isinf(w[j])) free.push_back(j);
  const Index f = static_cast<Index>(free.size());
  ProfileInner out;
  if (f == 0) {
    out.value = c0;
    out.h_at_max = h(x, theta);
    return out;
  }
  Matrix M(f, f);
  Vector bf(f);
  for (Index a = 0; a < f; ++a) {
    bf[a] = b[free[a]];
    for (Index c = 0; c < f; ++c) M(a, c) = -S(free[a], free[c]);
    M(a, a) += w[free[a]] * w[free[a]];
  }
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) {
    out.value = kInf;
    return out;
  }
  const Vector sol = llt.solve(bf);
  // reject numerically indefinite factorizations
  if (!sol.allFinite() || bf.dot(sol) < -1e-12 * (1.0 + bf.squaredNorm())) {
    out.value = kInf;
    return out;
  }
  out.value = c0 + 0.25 * bf.dot(sol);
  Vector moved = x;
  for (Index a = 0; a < f; ++a) moved[free[a]] += 0.5 * sol[a];
  out.h_at_max = h(moved, theta);
  return out;
}

Vector RegressionModel::fit_erm(const Matrix& samples) const {
  require(samples.cols() == d_ + 1, "regression: sample rows must be (x, y)");
  const Matrix X = samples.leftCols(d_);
  const Vector y = samples.col(d_);
  const Matrix G = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(G, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0) || eig.eigenvalues().minCoeff() < 1e-10 * top)
    fail(ErrorCode::RankDeficient, "design matrix is rank deficient");
  return G.ldlt().solve(X.transpose() * y);
}

// ---------------------------------------------------------------------- mean

double MeanModel::loss(const Vector& x, const Vector& theta) const {
  return 0.5 * (x - theta).squaredNorm();
}

Vector MeanModel::grad_x(const Vector& x, const Vector& theta) const { return x - theta; }

Vector MeanModel::h(const Vector& x, const Vector& theta) const { return theta - x; }

Matrix MeanModel::jac_x_h(const Vector&, const Vector&) const { return -Matrix::Identity(d_, d_); }

Matrix MeanModel::jac_theta_h(const Vector&, const Vector&) const { return Matrix::Identity(d_, d_); }

bool MeanModel::has_inner_sup(const CostSpec& cost) const { return cost.q == 2.0 && cost.r == 2.0; }

double MeanModel::inner_sup(const Vector& x, const Vector& theta, double lambda, const CostSpec& cost) const {
  if (!has_inner_sup(cost)) return EstimatingModel::inner_sup(x, theta, lambda, cost);
  // Coordinates decouple: sup_t ½(v + t)² − λw²t².
  const Vector w = cost.effective_weights(d_);
  double total = 0.0;
  for (Index j = 0; j < d_; ++j) {
    const double v = x[j] - theta[j];
    if (std::isinf(w[j])) {
      total += 0.5 * v * v;
      continue;
    }
    const double a = lambda * w[j] * w[j];
    if (a > 0.5) {
      total += 0.5 * v * v * (2.0 * a) / (2.0 * a - 1.0);
    } else if (!(a == 0.5 && v == 0.0)) {
      return kInf;
    }
  }
  return total;
}

double MeanModel::lambda_threshold(const Vector&, const CostSpec& cost) const {
  const Vector w = cost.effective_weights(d_);
  double t = 0.0;
  for (Index j = 0; j < d_; ++j) {
    if (std::isinf(w[j])) continue;
    t = std::max(t, w[j] == 0.0 ? kInf : 0.5 / (w[j] * w[j]));
  }
  return t;
}

bool MeanModel::has_profile_inner(const CostSpec& cost) const { return cost.r == 2.0; }

ProfileInner MeanModel::profile_inner(const Vector& x, const Vector& theta, const Vector& lambda,
                                      const CostSpec& cost) const {
  if (!has_profile_inner(cost)) return EstimatingModel::profile_inner(x, theta, lambda, cost);
  // sup_Δ −λᵀΔ − ‖WΔ‖_q² = ‖W⁻¹λ‖_p²/4.
  const Vector w = cost.effective_weights(d_);
  const double p = cost.dual_exponent();
  ProfileInner out;
  const double norm = weighted_dual_norm(lambda, w, p);
  if (!std::isfinite(norm)) return out;
  std::vector<Index> free;
  for (Index j = 0; j < d_; ++j)
    if (!std::isinf(w[j]) && w[j] > 0.0) free.push_back(j);
  Vector u(static_cast<Index>(free.size()));
  for (std::size_t a = 0; a < free.size(); ++a) u[static_cast<Index>(a)] = lambda[free[a]] / w[free[a]];
  const Vector v = -0.5 * norm * dual_direction(u, p);
  Vector delta = Vector::Zero(d_);
  for (std::size_t a = 0; a < free.size(); ++a) delta[free[a]] = v[static_cast<Index>(a)] / w[free[a]];
  out.value = lambda.dot(theta - x) + 0.25 * norm * norm;
  out.h_at_max = theta - x - delta;
  return out;
}

Vector MeanModel::fit_erm(const Matrix& samples) const {
  require(samples.cols() == d_, "mean: sample dimension mismatch");
  return samples.colwise().mean().transpose();
}

// ----------------------------------------------------------------- portfolio

double PortfolioModel::loss(const Vector& x, const Vector& theta) const { return -theta.dot(x); }

Vector PortfolioModel::grad_x(const Vector&, const Vector& theta) const { return -theta; }

Vector PortfolioModel::h(const Vector& x, const Vector&) const { return -x; }

Matrix PortfolioModel::jac_x_h(const Vector&, const Vector&) const { return -Matrix::Identity(d_, d_); }

Matrix PortfolioModel::jac_theta_h(const Vector&, const Vector&) const { return Matrix::Zero(d_, d_); }

bool PortfolioModel::has_inner_sup(const CostSpec&) const { return true; }

double PortfolioModel::inner_sup(const Vector& x, const Vector& theta, double lambda, const CostSpec& cost) const {
  // sup_t s·t − λt^r with s = ‖W⁻¹θ‖_p.
  const double base = -theta.dot(x);
  const double s = weighted_dual_norm(theta, cost.effective_weights(d_), cost.dual_exponent());
  if (s == 0.0) return base;
  if (!std::isfinite(s)) return kInf;
  if (cost.r == 1.0) return lambda >= s ? base : kInf;
  if (lambda <= 0.0) return kInf;
  const double r = cost.r;
  return base + (r - 1.0) * lambda * std::pow(s / (lambda * r), r / (r - 1.0));
}

double PortfolioModel::lambda_threshold(const Vector& theta, const CostSpec& cost) const {
  if (cost.r == 1.0) return weighted_dual_norm(theta, cost.effective_weights(d_), cost.dual_exponent());
  return 0.0;
}

std::unique_ptr<EstimatingModel> make_model(const std::string& name, Index param_dim) {
  require(param_dim >= 1, "model dimension must be positive");
  if (name == "regression") return std::make_unique<RegressionModel>(param_dim);
  if (name == "mean") return std::make_unique<MeanModel>(param_dim);
  if (name == "portfolio") return std::make_unique<PortfolioModel>(param_dim);
  fail(ErrorCode::InvalidArgument, "unknown model: " + name);
}

}  // namespace wdro

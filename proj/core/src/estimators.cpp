#include "wdro/estimators.hpp"

#include "wdro/error.hpp"
#include "wdro/model.hpp"
#include "wdro/norms.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

namespace wdro {

FitResult fit_erm_ols(const Matrix& samples) {
  require(samples.rows() > 0 && samples.cols() >= 2, "regression rows must be (x, y)");
  const Index d = samples.cols() - 1;
  FitResult out;
  out.theta = RegressionModel(d).fit_erm(samples);
  const Vector e = samples.col(d) - samples.leftCols(d) * out.theta;
  const double n = static_cast<double>(samples.rows());
  out.objective = e.squaredNorm() / n;
  out.stationarity = (2.0 / n * samples.leftCols(d).transpose() * e).norm();
  out.converged = true;
  return out;
}

// ------------------------------------------------------------ square-root lasso

namespace {

struct LassoProblem {
  Matrix G;  // XᵀX / n
  Vector b;  // Xᵀy / n
  double yy = 0.0;
  double tau = 0.0;  // √δ
  double p = 1.0;

  double mse(const Vector& theta) const {
    return std::max(0.0, yy - 2.0 * b.dot(theta) + theta.dot(G * theta));
  }
  double penalty(const Vector& theta) const { return tau * lp_norm(theta, p); }
  double objective(const Vector& theta) const { return std::sqrt(mse(theta)) + penalty(theta); }

  Vector prox(const Vector& v, double step) const {
    const double k = tau * step;
    if (p == 1.0) {
      Vector out(v.size());
      for (Index j = 0; j < v.size(); ++j)
        out[j] = std::copysign(std::max(0.0, std::abs(v[j]) - k), v[j]);
      return out;
    }
    const double norm = v.norm();
    if (norm <= k) return Vector::Zero(v.size());
    return (1.0 - k / norm) * v;
  }
};

void newton_polish(const LassoProblem& prob, Vector& theta) {
  const Index d = theta.size();
  double current = prob.objective(theta);
  for (int it = 0; it < 50; ++it) {
    std::vector<Index> support;
    for (Index j = 0; j < d; ++j)
      if (theta[j] != 0.0) support.push_back(j);
    if (support.empty()) return;
    const Index s = static_cast<Index>(support.size());
    const double f = std::sqrt(prob.mse(theta));
    if (f <= 0.0) return;
    const Vector r = prob.G * theta - prob.b;
    Vector grad(s);
    Matrix hess(s, s);
    for (Index a = 0; a < s; ++a) {
      grad[a] = r[support[a]] / f;
      for (Index c = 0; c < s; ++c)
        hess(a, c) = prob.G(support[a], support[c]) / f - r[support[a]] * r[support[c]] / (f * f * f);
    }
    if (prob.p == 1.0) {
      for (Index a = 0; a < s; ++a) grad[a] += prob.tau * (theta[support[a]] > 0 ? 1.0 : -1.0);
    } else {
      Vector ts(s);
      for (Index a = 0; a < s; ++a) ts[a] = theta[support[a]];
      const double norm = ts.norm();
      const Vector u = ts / norm;
      grad += prob.tau * u;
      hess += prob.tau / norm * (Matrix::Identity(s, s) - u * u.transpose());
    }
    Eigen::LDLT<Matrix> ldlt(hess);
    if (ldlt.info() != Eigen::Success) return;
    const Vector step = -ldlt.solve(grad);
    if (!step.allFinite()) return;
    double alpha = 1.0;
    if (prob.p == 1.0) {
      // stay inside the current orthant
      for (Index a = 0; a < s; ++a) {
        const double t = theta[support[a]];
        if (t * step[a] < 0.0 && std::abs(step[a]) > std::abs(t)) alpha = std::min(alpha, -t / step[a] * 0.999);
      }
    }
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls) {
      Vector trial = theta;
      for (Index a = 0; a < s; ++a) trial[support[a]] += alpha * step[a];
      const double value = prob.objective(trial);
      if (value <= current) {
        const double moved = alpha * step.norm();
        theta = trial;
        improved = value < current;
        current = value;
        if (moved <= 1e-15 * (1.0 + theta.norm())) return;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) return;
  }
}

double prox_residual(const LassoProblem& prob, const Vector& theta) {
  const double f = std::sqrt(prob.mse(theta));
  if (f <= 0.0) return kInf;
  const Vector grad = (prob.G * theta - prob.b) / f;
  return (theta - prob.prox(theta - grad, 1.0)).norm();
}

}  // namespace

double sqrt_lasso_objective(const Matrix& samples, const Vector& theta, double delta, double p) {
  const Index d = theta.size();
  require(samples.cols() == d + 1, "sample rows must be (x, y)");
  const Vector e = samples.col(d) - samples.leftCols(d) * theta;
  return std::sqrt(e.squaredNorm() / static_cast<double>(samples.rows())) + std::sqrt(delta) * lp_norm(theta, p);
}

FitResult fit_sqrt_lasso(const Matrix& samples, double delta, double p, const SqrtLassoOptions& options) {
  require(samples.rows() > 0 && samples.cols() >= 2, "regression rows must be (x, y)");
  require(delta >= 0.0 && std::isfinite(delta), "delta must be a finite nonnegative number");
  require(p == 1.0 || p == 2.0, "fit_sqrt_lasso supports p in {1, 2}");
  const Index d = samples.cols() - 1;
  const double n = static_cast<double>(samples.rows());
  const Matrix X = samples.leftCols(d);
  const Vector y = samples.col(d);

  LassoProblem prob;
  prob.G = X.transpose() * X / n;
  prob.b = X.transpose() * y / n;
  prob.yy = y.squaredNorm() / n;
  prob.tau = std::sqrt(delta);
  prob.p = p;
  require(prob.yy > 0.0, "response is identically zero");

  FitResult out;
  out.delta = delta;
  Vector theta = Vector::Zero(d);
  try {
    theta = RegressionModel(d).fit_erm(samples);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RankDeficient) throw;
  }
  if (std::sqrt(prob.mse(theta)) <= 1e-12 * std::sqrt(prob.yy)) {
    // The data-fit term is nonsmooth at an interpolating θ.
    out.theta = theta;
    out.objective = sqrt_lasso_objective(samples, theta, delta, p);
    out.converged = delta == 0.0;
    out.warnings.push_back("DegenerateResiduals");
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(prob.G, Eigen::EigenvaluesOnly);
  const double top = std::max(eig.eigenvalues().maxCoeff(), 1e-300);
  double step = std::sqrt(prob.mse(theta)) / top;
  double current = prob.objective(theta);
  std::deque<double> history{current};
  bool stopped = false;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const double f = std::sqrt(prob.mse(theta));
    if (f <= 0.0) break;
    const Vector grad = (prob.G * theta - prob.b) / f;
    Vector next;
    double next_value = current;
    for (int ls = 0; ls < 100; ++ls) {
      next = prob.prox(theta - step * grad, step);
      const Vector diff = next - theta;
      const double fn = std::sqrt(prob.mse(next));
      if (fn <= f + grad.dot(diff) + diff.squaredNorm() / (2.0 * step)) {
        next_value = fn + prob.penalty(next);
        break;
      }
      step *= 0.5;
    }
    if (next_value <= current) {
      theta = next;
      current = next_value;
    }
    step *= 1.25;
    history.push_back(current);
    if (static_cast<int>(history.size()) > options.window) {
      const double old = history.front();
      history.pop_front();
      if (old - current <= options.relative_tol * std::max(1.0, std::abs(current))) {
        stopped = true;
        ++it;
        break;
      }
    }
  }
  newton_polish(prob, theta);

  out.theta = theta;
  out.iterations = it;
  out.objective = sqrt_lasso_objective(samples, theta, delta, p);
  out.stationarity = prox_residual(prob, theta);
  out.converged = stopped && out.stationarity <= 1e-6;
  return out;
}

// ------------------------------------------------------- robust mean-variance

namespace {

using CutOracle = std::function<double(const Vector& z, Vector& grad)>;

struct CutSearch {
  Vector best;
  double best_value = kInf;
  bool found_feasible = false;
  int iterations = 0;
};

// Central-cut ellipsoid method for min f(z) s.t. g(z) ≤ 0 inside a ball.
CutSearch ellipsoid_minimize(const CutOracle& f, const CutOracle* g, const Vector& center, double radius,
                             int max_iterations, double tol) {
  const Index k = center.size();
  CutSearch out;
  Vector c = center;
  Matrix P = Matrix::Identity(k, k) * radius * radius;
  Vector grad(k);
  const double kk = static_cast<double>(k);
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    bool feasible = true;
    if (g) {
      const double gv = (*g)(c, grad);
      if (gv > 0.0) feasible = false;
    }
    if (feasible) {
      const double fv = f(c, grad);
      if (fv < out.best_value) {
        out.best_value = fv;
        out.best = c;
        out.found_feasible = true;
      }
    }
    const double width = std::sqrt(std::max(0.0, grad.dot(P * grad)));
    // width == 0: a feasible center is optimal; an infeasible one has no cut
    if (width == 0.0) break;
    if (feasible && width <= tol * (1.0 + std::abs(out.best_value))) break;
    const Vector gt = P * grad / std::sqrt(grad.dot(P * grad));
    if (k == 1) {
      c -= 0.5 * gt;
      P *= 0.25;
    } else {
      c -= gt / (kk + 1.0);
      P = kk * kk / (kk * kk - 1.0) * (P - 2.0 / (kk + 1.0) * gt * gt.transpose());
      P = 0.5 * (P + P.transpose());
    }
  }
  return out;
}

Matrix affine_basis(Index d) {
  // Orthonormal basis of {v : 1ᵀv = 0}.
  Matrix A = Matrix::Ones(1, d);
  Eigen::FullPivLU<Matrix> lu(A);
  Matrix N = lu.kernel();
  Eigen::HouseholderQR<Matrix> qr(N);
  return qr.householderQ() * Matrix::Identity(d, d - 1);
}

}  // namespace

FitResult fit_dr_mean_variance(const Matrix& returns, double delta, double target_return, double p) {
  require(returns.rows() > 0 && returns.cols() >= 1, "empty return sample");
  require(delta >= 0.0 && std::isfinite(delta), "delta must be a finite nonnegative number");
  require(p >= 1.0, "p must be in [1, inf]");
  const Index d = returns.cols();
  const double n = static_cast<double>(returns.rows());
  const Vector mu = returns.colwise().mean().transpose();
  const Matrix centered = returns.rowwise() - mu.transpose();
  const Matrix cov = centered.transpose() * centered / n;
  const double tau = std::sqrt(delta);

  auto objective = [&](const Vector& theta) {
    return std::sqrt(std::max(0.0, theta.dot(cov * theta))) + tau * lp_norm(theta, p);
  };
  auto robust_return = [&](const Vector& theta) { return theta.dot(mu) - tau * lp_norm(theta, p); };

  FitResult out;
  out.delta = delta;
  const Vector theta0 = Vector::Constant(d, 1.0 / static_cast<double>(d));
  if (d == 1) {
    if (robust_return(theta0) < target_return) fail(ErrorCode::Infeasible, "robust return constraint is infeasible");
    out.theta = theta0;
    const double j = objective(theta0);
    out.objective = j * j;
    out.converged = true;
    return out;
  }
  const Matrix N = affine_basis(d);
  auto lift = [&](const Vector& z) -> Vector { return theta0 + N * z; };

  CutOracle f = [&](const Vector& z, Vector& grad) {
    const Vector theta = lift(z);
    const double var = std::max(0.0, theta.dot(cov * theta));
    Vector g = tau * dual_direction(theta, p);
    if (var > 0.0) g += cov * theta / std::sqrt(var);
    grad = N.transpose() * g;
    return std::sqrt(var) + tau * lp_norm(theta, p);
  };
  CutOracle constraint = [&](const Vector& z, Vector& grad) {
    const Vector theta = lift(z);
    grad = N.transpose() * (-mu + tau * dual_direction(theta, p));
    return target_return - robust_return(theta);
  };
  CutOracle neg_return = [&](const Vector& z, Vector& grad) {
    const Vector theta = lift(z);
    grad = N.transpose() * (-mu + tau * dual_direction(theta, p));
    return -robust_return(theta);
  };

  // Warm start: classical minimum-variance weights when the covariance allows.
  Vector z0 = Vector::Zero(d - 1);
  {
    Eigen::LDLT<Matrix> ldlt(cov);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      const Vector w = ldlt.solve(Vector::Ones(d));
      if (w.allFinite() && std::abs(w.sum()) > 1e-300) z0 = N.transpose() * (w / w.sum() - theta0);
    }
  }
  const int max_iter = 4000 * static_cast<int>(d * d) + 2000;

  // Feasibility: maximize the robust return inside growing balls.
  double radius = 4.0 * (1.0 + z0.norm());
  double best_return = -kInf;
  bool feasible = false;
  for (int grow = 0; grow < 40 && !feasible; ++grow) {
    const CutSearch s = ellipsoid_minimize(neg_return, nullptr, Vector::Zero(d - 1), radius, max_iter, 1e-13);
    const double value = -s.best_value;
    if (value >= target_return) {
      feasible = true;
      break;
    }
    if (grow > 2 && value <= best_return + 1e-12 * (1.0 + std::abs(value))) break;
    best_return = std::max(best_return, value);
    radius *= 2.0;
  }
  if (!feasible) fail(ErrorCode::Infeasible, "robust return constraint is infeasible for every admissible portfolio");

  CutSearch best;
  for (int grow = 0; grow < 40; ++grow) {
    best = ellipsoid_minimize(f, &constraint, z0, radius, max_iter, 1e-14);
    if (best.found_feasible && (best.best - z0).norm() < 0.5 * radius) break;
    radius *= 2.0;
  }
  if (!best.found_feasible) fail(ErrorCode::Infeasible, "no feasible portfolio found");

  out.theta = lift(best.best);
  out.iterations = best.iterations;
  const double j = objective(out.theta);
  out.objective = j * j;
  out.converged = best.iterations < max_iter;

  // Ties: look for an equally good feasible point a short distance away.
  const double probe = 1e-3 * (1.0 + out.theta.norm());
  for (Index c = 0; c < d - 1; ++c) {
    for (double sgn : {-1.0, 1.0}) {
      const Vector other = out.theta + sgn * probe * N.col(c);
      if (robust_return(other) >= target_return && std::abs(objective(other) - j) <= 1e-9 * (1.0 + j)) {
        if (std::find(out.warnings.begin(), out.warnings.end(), "FlatObjective") == out.warnings.end())
          out.warnings.push_back("FlatObjective");
      }
    }
  }
  out.stationarity = std::max(0.0, target_return - robust_return(out.theta));
  return out;
}

}  // namespace wdro

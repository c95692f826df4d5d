#include "wdro/profile.hpp"

#include "wdro/error.hpp"
#include "wdro/lp.hpp"
#include "wdro/optim.hpp"

#include <cmath>
#include <vector>

namespace wdro {

bool in_theta_tilde(const EstimatingModel& model, const Matrix& samples, const Vector& theta) {
  const Index n = samples.rows();
  const Index k = model.param_dim();
  Matrix H(k, n);
  for (Index i = 0; i < n; ++i) H.col(i) = model.h(samples.row(i).transpose(), theta);
  const double scale = H.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return false;

  // variables (w_1..w_n, t): Σ w_i h_i − t·dir = 0, Σ w_i = 1, maximize t
  for (Index j = 0; j < k; ++j) {
    for (double sign : {1.0, -1.0}) {
      LinearProgram lp;
      lp.objective = Vector::Zero(n + 1);
      lp.objective[n] = 1.0;
      lp.eq_matrix = Matrix::Zero(k + 1, n + 1);
      lp.eq_matrix.topLeftCorner(k, n) = H / scale;
      lp.eq_matrix(j, n) = -sign;
      lp.eq_matrix.block(k, 0, 1, n).setOnes();
      lp.eq_rhs = Vector::Zero(k + 1);
      lp.eq_rhs[k] = 1.0;
      const LpSolution sol = solve_lp(lp);
      if (sol.status == LpStatus::Unbounded) continue;
      if (sol.status != LpStatus::Optimal || sol.value <= 1e-10) return false;
    }
  }
  return true;
}

ProfileValue profile_value(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                           const CostSpec& cost) {
  require(samples.rows() > 0, "empty sample");
  require(samples.cols() == model.sample_dim(), "sample dimension does not match the model");
  require(theta.size() == model.param_dim(), "theta dimension does not match the model");
  cost.validate(samples.cols());
  if (!model.has_profile_inner(cost))
    fail(ErrorCode::Unsupported, model.name() + ": profile function not available for this cost");
  if (!in_theta_tilde(model, samples, theta))
    fail(ErrorCode::OutsideThetaTilde, "0 is not interior to the convex hull of the estimating function values");

  const Index n = samples.rows();
  const Index k = model.param_dim();
  const double inv_n = 1.0 / static_cast<double>(n);
  ValueGrad objective = [&](const Vector& lambda, Vector& grad) {
    double total = 0.0;
    Vector g = Vector::Zero(k);
    for (Index i = 0; i < n; ++i) {
      const ProfileInner inner = model.profile_inner(samples.row(i).transpose(), theta, lambda, cost);
      if (!std::isfinite(inner.value)) return -kInf;
      total += inner.value;
      g += inner.h_at_max;
    }
    grad = -inv_n * g;
    return -inv_n * total;
  };

  const Vector hn = model.mean_h(samples, theta) * std::sqrt(static_cast<double>(n));
  const double scale = hn.norm() > 0.0 ? hn.norm() : 1.0;
  std::vector<Vector> starts{Vector::Zero(k)};
  bool any_nonzero = false;
  Vector probe(k);
  for (Index j = 0; j < k; ++j) {
    for (double sign : {1.0, -1.0}) {
      Vector s = Vector::Zero(k);
      s[j] = sign * scale;
      bool finite = false;
      for (int shrink = 0; shrink < 60; ++shrink) {
        if (std::isfinite(objective(s, probe))) {
          finite = true;
          break;
        }
        s *= 0.5;
      }
      if (finite) {
        any_nonzero = true;
        starts.push_back(s);
      }
    }
  }
  if (!any_nonzero)
    fail(ErrorCode::InnerSupUnboundedEverywhere, "inner supremum is infinite for every nonzero lambda");

  AscentOptions options;
  options.max_iterations = 2000;
  options.gradient_tol = 1e-13;
  AscentResult best;
  for (const Vector& s : starts) {
    const AscentResult r = maximize_concave(objective, s, options);
    if (r.value > best.value) best = r;  // strict: earlier start wins ties
  }

  ProfileValue out;
  out.value = std::max(0.0, best.value);
  out.lambda_star = best.x;
  out.scaled = static_cast<double>(n) * out.value;
  out.converged = best.converged;
  return out;
}

double scaled_profile_stat(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                           const CostSpec& cost) {
  return profile_value(model, samples, theta, cost).scaled;
}

}  // namespace wdro

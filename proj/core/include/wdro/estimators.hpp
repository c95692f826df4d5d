#pragma once

#include "wdro/types.hpp"

#include <string>
#include <vector>

namespace wdro {

struct FitResult {
  Vector theta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double delta = 0.0;
  /// Norm of the proximal-gradient (or projected) optimality residual.
  double stationarity = 0.0;
  /// Non-fatal conditions, e.g. "DegenerateResiduals", "FlatObjective".
  std::vector<std::string> warnings;
};

/// Least squares on rows (x, y). Throws RankDeficient when XᵀX is singular
/// beyond 1e-10 relative to its largest eigenvalue. Objective is the MSE.
FitResult fit_erm_ols(const Matrix& samples);

struct SqrtLassoOptions {
  int max_iterations = 200000;
  int window = 50;            // iterations over which the relative change is measured
  double relative_tol = 1e-10;
};

/// argmin √MSE(θ) + √δ‖θ‖_p for p ∈ {1, 2}; rows are (x, y). Proximal
/// gradient with backtracking from the OLS warm start, then a Newton polish
/// on the active set. Objective is √MSE + √δ‖θ‖_p.
FitResult fit_sqrt_lasso(const Matrix& samples, double delta, double p, const SqrtLassoOptions& options = {});

/// Distributionally robust mean-variance portfolio:
///   min (√(θᵀCov_nθ) + √δ‖θ‖_p)²  s.t.  1ᵀθ = 1,  θᵀX̄ ≥ t + √δ‖θ‖_p.
/// Rows of `returns` are asset-return samples. Throws Infeasible when the
/// robust return constraint cannot be met. Objective is the squared form.
FitResult fit_dr_mean_variance(const Matrix& returns, double delta, double target_return, double p);

/// √MSE(θ) + √δ‖θ‖_p evaluated directly.
double sqrt_lasso_objective(const Matrix& samples, const Vector& theta, double delta, double p);

}  // namespace wdro

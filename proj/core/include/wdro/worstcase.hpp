#pragma once

#include "wdro/model.hpp"
#include "wdro/ot.hpp"
#include "wdro/types.hpp"

#include <vector>

namespace wdro {

struct RobustRisk {
  double value = 0.0;
  /// Minimizing multiplier. +∞ when δ = 0: the infimum is then only reached
  /// in the limit λ → ∞.
  double lambda_star = 0.0;
  double delta = 0.0;
};

/// R_δ(P_n, θ) = inf_{λ ≥ 0} λδ + (1/n) Σ_i sup_Δ {ℓ(x_i + Δ, θ) − λ c(x_i, x_i + Δ)},
/// using the model's closed-form inner supremum.
RobustRisk robust_risk_dual(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                            double delta, const CostSpec& cost);

/// −θᵀμ + √δ‖θ‖_p.
double wc_portfolio_return(const Vector& theta, const Vector& sample_mean, double delta, double p);

/// (s + √δ‖θ‖_p)² where s = √(θᵀCov_n θ) is the sample standard deviation of θᵀX.
double wc_variance(const Vector& theta, double sample_std, double delta, double p);

/// (√MSE + √δ (‖θ‖_p^p + a^{−p/2})^{1/p})²; a = ∞ drops the a term.
/// Sample rows are (x, y).
double wc_regression_risk(const Vector& theta, const Matrix& samples, double delta, double p, double a);

/// Worst-case variance of θᵀX through the generic dual: the inner
/// minimization over the centering constant m of the worst-case risk of
/// (θᵀx − m)². Cost acts on x only.
RobustRisk robust_variance_dual(const Matrix& samples, const Vector& theta, double delta, const CostSpec& cost);

/// √((1/n) Σ ‖D_xℓ(x_i, θ)‖_p²).
double variation_norm(const EstimatingModel& model, const Matrix& samples, const Vector& theta, double p);

/// Same with the cost's coordinate weights: ‖W⁻¹D_xℓ‖_p, p dual to q, pinned
/// coordinates dropped. This is the regularizer matching the cost.
double variation_norm(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                      const CostSpec& cost);

struct ExpansionRow {
  double delta = 0.0;
  double robust_risk = 0.0;
  double residual = 0.0;  // R_δ − R_0 − √δ V
  double ratio = 0.0;     // residual / δ (0 at δ = 0)
};

/// Residuals of the first-order expansion in √δ over a δ grid (r = 2 only).
std::vector<ExpansionRow> expansion_check(const EstimatingModel& model, const Matrix& samples,
                                          const Vector& theta, const CostSpec& cost,
                                          const std::vector<double>& deltas);

}  // namespace wdro

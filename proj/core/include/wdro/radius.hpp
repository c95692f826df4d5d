#pragma once

#include "wdro/model.hpp"
#include "wdro/ot.hpp"
#include "wdro/types.hpp"

#include <cstdint>
#include <vector>

namespace wdro {

enum class ConjugateMode { ClosedForm, Numeric };

/// φ̂(ξ) = ¼ (1/n) Σ_i ‖W⁻¹ J_iᵀ ξ‖_p² with J_i = D_x h(x_i, θ) restricted to
/// the coordinates the cost lets move. For p = 2 this is ¼ ξᵀAξ.
struct LimitLaw {
  double p = 2.0;
  std::vector<Matrix> jacobians;  // W⁻¹-scaled, k × (movable coordinates)
  Matrix A;                       // (1/n) Σ J_i J_iᵀ
  Matrix sigma;                   // 1/n covariance of h(x_i, θ)
  ConjugateMode mode = ConjugateMode::ClosedForm;
  bool singular_a = false;        // A is rank deficient: φ* uses the pseudo-inverse
  Matrix a_inverse;               // A⁻¹ or its pseudo-inverse (p = 2)

  Index dim() const { return A.rows(); }
};

LimitLaw build_limit_law(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                         const CostSpec& cost);

/// φ̂(ξ, θ) with the cost's weights and p dual to q.
double phi_hat(const Vector& xi, const Vector& theta, const EstimatingModel& model, const Matrix& samples,
               const CostSpec& cost);
/// φ̂(ξ, θ) with unit weights on every sample coordinate and the given p.
double phi_hat(const Vector& xi, const Vector& theta, const EstimatingModel& model, const Matrix& samples,
               double p);
double phi_hat(const Vector& xi, const LimitLaw& law);

/// Convex conjugate φ*(z) = sup_ξ ξᵀz − φ̂(ξ). Closed form zᵀA⁻¹z for p = 2,
/// numeric otherwise.
double phi_star(const Vector& z, const LimitLaw& law);
/// Always the numeric maximization, whatever p is.
double phi_star_numeric(const Vector& z, const LimitLaw& law);

struct QuantileEstimate {
  double eta = 0.0;
  double alpha = 0.0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t quantile_index = 0;  // 1-based order statistic
};

struct RadiusEstimate {
  double delta = 0.0;
  QuantileEstimate quantile;
  Vector theta_erm;
  Matrix sigma;
  bool ridge_applied = false;
  bool singular_a = false;
};

/// Default number of draws: max(1000, ⌈50/α⌉).
std::size_t default_draws(double alpha);

/// 1-based index ⌈k(1 − α)⌉ of the upper empirical quantile.
std::size_t quantile_index(std::size_t k, double alpha);

/// Draws H ~ N(0, Σ̂) with Σ̂ the covariance of h at the ERM, evaluates φ̂*(H)
/// and returns δ̂ = η̂_{1−α}/n. Draw i uses stream (seed, i).
RadiusEstimate estimate_radius(const EstimatingModel& model, const Matrix& samples, double alpha, std::size_t k,
                               std::uint64_t seed, const CostSpec& cost);

/// Sorted sample of φ̂*(H_i): the quantity whose quantile defines η̂.
std::vector<double> limit_law_sample(const LimitLaw& law, const Matrix& sigma, std::size_t k, std::uint64_t seed,
                                     bool* ridge_applied = nullptr);

/// k draws of Σ_i w_i N_i² with w_i = D_i / (1 + D_i ‖θ‖² / σ²).
std::vector<double> genchisq_sample(const Vector& eigenvalues, double norm_theta_sq, double sigma_sq, std::size_t k,
                                    std::uint64_t seed);

struct HighDimRadius {
  double sqrt_delta = 0.0;
  double delta = 0.0;
  bool alpha_out_of_range = false;  // α outside (0, 1/8)
};

/// √δ = n^{−1/2} · π/(π − 2) · Φ⁻¹(1 − α/(2d)).
HighDimRadius sqrt_lasso_radius(double n, double d, double alpha);

/// Standard normal quantile Φ⁻¹(p).
double normal_quantile(double p);
/// Φ⁻¹(1 − q), accurate for small q.
double normal_upper_quantile(double q);

}  // namespace wdro

#pragma once

#include "wdro/model.hpp"
#include "wdro/ot.hpp"
#include "wdro/types.hpp"

namespace wdro {

struct ProfileValue {
  double value = 0.0;
  Vector lambda_star;
  double scaled = 0.0;  // n · value
  bool converged = false;
};

/// Whether 0 lies in the interior of conv{h(x_i, θ)}: for every ±e_j an LP
/// must find a convex combination of the h_i equal to a strictly positive
/// multiple of that direction.
bool in_theta_tilde(const EstimatingModel& model, const Matrix& samples, const Vector& theta);

/// Minimal transport cost from P_n to {P : E_P h(X, θ) = 0}, through the dual
///   max_λ −(1/n) Σ_i sup_x {λᵀh(x, θ) − c(x_i, x)}.
/// Throws OutsideThetaTilde or InnerSupUnboundedEverywhere.
ProfileValue profile_value(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                           const CostSpec& cost);

/// n · profile_value, the test statistic for H₀: θ₀ = θ.
double scaled_profile_stat(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                           const CostSpec& cost);

}  // namespace wdro

#pragma once

#include "wdro/types.hpp"

namespace wdro {

/// Hölder conjugate of p ∈ [1, ∞]: 1/p + 1/q = 1. Exact for 1, 2 and ∞.
double conjugate_exponent(double p);

/// ‖v‖_p for p ∈ [1, ∞].
double lp_norm(const Vector& v, double p);

/// A vector w with ‖w‖_q = 1 (q conjugate to p) and vᵀw = ‖v‖_p.
/// For p ∈ (1, ∞) this is the gradient of ‖·‖_p at v; for p ∈ {1, ∞} it is
/// a deterministic subgradient. Returns the zero vector when v = 0.
Vector dual_direction(const Vector& v, double p);

/// The Hölder-attaining perturbation ‖θ‖_p^{1−p/q} sgn(θ)|θ|^{p/q}; it has
/// ‖Δ‖_q = ‖θ‖_p and θᵀΔ = ‖θ‖_p². Finite p only.
Vector holder_maximizer(const Vector& theta, double p);

}  // namespace wdro

#pragma once

#include "wdro/types.hpp"

#include <optional>

namespace wdro {

/// Finitely supported probability measure. Row i of `atoms` is the i-th
/// support point; duplicates are allowed.
struct DiscreteDistribution {
  Matrix atoms;
  Vector weights;

  Index size() const { return atoms.rows(); }
  Index dim() const { return atoms.cols(); }

  /// Throws InvalidArgument unless weights are nonnegative, match the atom
  /// count and sum to one within 1e-12.
  void validate() const;

  /// Uniform weights 1/n on the rows of `samples`.
  static DiscreteDistribution empirical(const Matrix& samples);
};

/// c(x, x′) = ‖W(x − x′)‖_q^r with W = diag(coord_weights).
/// A weight of +∞ pins the coordinate: the cost is +∞ unless it matches.
/// When regression_weight = a is set it applies to the last coordinate (the
/// response) as the factor √a, so for q = 2 and r = 2 the cost reads
/// ‖Δx‖² + a|Δy|²; a = ∞ pins the response.
struct CostSpec {
  double q = 2.0;
  double r = 2.0;
  Vector coord_weights;  // empty: all ones
  std::optional<double> regression_weight;

  void validate(Index dim) const;

  /// Per-coordinate weights after folding in the regression weight.
  Vector effective_weights(Index dim) const;

  double operator()(const Vector& x, const Vector& y) const;

  /// All pairwise costs between rows of a and rows of b.
  Matrix pairwise(const Matrix& a, const Matrix& b) const;

  /// Hölder conjugate of q.
  double dual_exponent() const;
};

struct Coupling {
  Matrix plan;  // rows: source atoms, columns: target atoms
  Vector row_marginal;
  Vector col_marginal;
};

struct TransportResult {
  double value = 0.0;
  Coupling coupling;
};

/// min over couplings of E_π[c]. Throws InfeasibleCost when every coupling has
/// infinite cost.
TransportResult transport_cost(const DiscreteDistribution& p, const DiscreteDistribution& q,
                               const CostSpec& cost);

struct WorstCasePrimal {
  double value = 0.0;
  Coupling coupling;  // reference atoms × candidate points
  double budget_used = 0.0;
};

/// max Σ_ij f_j π_ij  s.t.  π ≥ 0, Σ_j π_ij = p_i, Σ_ij c(x_i, z_j) π_ij ≤ δ,
/// where z_j are the rows of `support` and f_j = f(z_j).
WorstCasePrimal worstcase_expectation_primal(const Matrix& support, const Vector& f,
                                             const DiscreteDistribution& reference, double delta,
                                             const CostSpec& cost);

struct WorstCaseDual {
  double value = 0.0;
  double lambda = 0.0;
};

/// inf_{λ ≥ 0} λδ + Σ_i p_i max_j {f_j − λ c(x_i, z_j)}. Every reference atom
/// must appear among the candidate points (so that c(x, x) = 0 is available).
WorstCaseDual worstcase_expectation_dual(const Matrix& support, const Vector& f,
                                         const DiscreteDistribution& reference, double delta,
                                         const CostSpec& cost);

}  // namespace wdro

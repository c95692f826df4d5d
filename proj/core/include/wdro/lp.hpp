#pragma once

#include "wdro/types.hpp"

#include <cstddef>

namespace wdro {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

/// maximize objectiveᵀx  s.t.  eq_matrix·x = eq_rhs,  le_matrix·x ≤ le_rhs,  x ≥ 0.
/// Either constraint block may be empty (zero rows). Column counts must match
/// objective.size().
struct LinearProgram {
  Vector objective;
  Matrix eq_matrix;
  Vector eq_rhs;
  Matrix le_matrix;
  Vector le_rhs;
};

struct LpSolution {
  LpStatus status = LpStatus::IterationLimit;
  double value = 0.0;
  Vector x;
  std::size_t iterations = 0;
};

/// Dense two-phase primal simplex. Dantzig pricing with a switch to Bland's
/// rule after a run of degenerate pivots; the final basic solution is
/// re-solved against the original data to remove accumulated pivot error.
/// Intended for the small programs that appear in this library (tens of rows,
/// up to a few thousand columns).
LpSolution solve_lp(const LinearProgram& program, std::size_t max_iterations = 100000);

}  // namespace wdro

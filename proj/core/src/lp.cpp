#include "wdro/lp.hpp"

#include "wdro/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace wdro {
namespace {

constexpr double kPivotTol = 1e-10;

struct Tableau {
  Matrix rows;                  // m × (N + 1); last column is the right-hand side
  std::vector<Index> basis;     // basic column per row
  std::vector<bool> eligible;   // columns allowed to enter
  std::size_t iterations = 0;

  Index cols() const { return rows.cols() - 1; }

  void pivot(Index r, Index c) {
    rows.row(r) /= rows(r, c);
    for (Index i = 0; i < rows.rows(); ++i) {
      if (i == r) continue;
      const double factor = rows(i, c);
      if (factor != 0.0) rows.row(i) -= factor * rows.row(r);
    }
    basis[static_cast<std::size_t>(r)] = c;
    ++iterations;
  }

  // Minimizes costᵀx over the current basis. Returns Optimal or Unbounded or
  // IterationLimit.
  LpStatus minimize(const Vector& cost, std::size_t max_iterations) {
    const Index m = rows.rows();
    const Index n = cols();
    const double cost_scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    std::size_t degenerate_run = 0;
    while (true) {
      if (iterations >= max_iterations) return LpStatus::IterationLimit;
      // reduced costs d_j = c_j − c_Bᵀ B⁻¹A_j
      Vector reduced = cost;
      for (Index i = 0; i < m; ++i) {
        const double cb = cost[basis[static_cast<std::size_t>(i)]];
        if (cb != 0.0) reduced -= cb * rows.row(i).head(n).transpose();
      }
      const bool bland = degenerate_run > 50;
      Index entering = -1;
      double best = -1e-11 * cost_scale;
      for (Index j = 0; j < n; ++j) {
        if (!eligible[static_cast<std::size_t>(j)]) continue;
        if (reduced[j] < best) {
          entering = j;
          if (bland) break;
          best = reduced[j];
        }
      }
      if (entering < 0) return LpStatus::Optimal;

      Index leaving = -1;
      double best_ratio = kInf;
      for (Index i = 0; i < m; ++i) {
        const double a = rows(i, entering);
        if (a <= kPivotTol) continue;
        const double ratio = std::max(0.0, rows(i, n)) / a;
        if (ratio < best_ratio - 1e-14 ||
            (ratio <= best_ratio + 1e-14 && leaving >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leaving)])) {
          best_ratio = std::min(best_ratio, ratio);
          leaving = i;
        }
      }
      if (leaving < 0) return LpStatus::Unbounded;
      degenerate_run = best_ratio <= 1e-14 ? degenerate_run + 1 : 0;
      pivot(leaving, entering);
    }
  }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& program, std::size_t max_iterations) {
  const Index n = program.objective.size();
  const Index m_eq = program.eq_matrix.rows();
  const Index m_le = program.le_matrix.rows();
  require(m_eq == 0 || program.eq_matrix.cols() == n, "eq_matrix column count mismatch");
  require(m_le == 0 || program.le_matrix.cols() == n, "le_matrix column count mismatch");
  require(program.eq_rhs.size() == m_eq && program.le_rhs.size() == m_le,
          "right-hand side size mismatch");

  const Index m = m_eq + m_le;
  // Columns: [structural n | slack m_le | artificial m]
  const Index slack0 = n;
  const Index art0 = n + m_le;
  const Index total = n + m_le + m;

  Tableau tab;
  tab.rows = Matrix::Zero(m, total + 1);
  tab.basis.assign(static_cast<std::size_t>(m), -1);
  for (Index i = 0; i < m_eq; ++i) {
    const double sign = program.eq_rhs[i] < 0 ? -1.0 : 1.0;
    tab.rows.row(i).head(n) = sign * program.eq_matrix.row(i);
    tab.rows(i, total) = sign * program.eq_rhs[i];
  }
  for (Index k = 0; k < m_le; ++k) {
    const Index i = m_eq + k;
    const double sign = program.le_rhs[k] < 0 ? -1.0 : 1.0;
    tab.rows.row(i).head(n) = sign * program.le_matrix.row(k);
    tab.rows(i, slack0 + k) = sign;
    tab.rows(i, total) = sign * program.le_rhs[k];
  }
  std::vector<bool> needs_artificial(static_cast<std::size_t>(m), true);
  for (Index k = 0; k < m_le; ++k) {
    const Index i = m_eq + k;
    if (tab.rows(i, slack0 + k) > 0) {
      tab.basis[static_cast<std::size_t>(i)] = slack0 + k;
      needs_artificial[static_cast<std::size_t>(i)] = false;
    }
  }
  for (Index i = 0; i < m; ++i) {
    if (needs_artificial[static_cast<std::size_t>(i)]) {
      tab.rows(i, art0 + i) = 1.0;
      tab.basis[static_cast<std::size_t>(i)] = art0 + i;
    }
  }
  tab.eligible.assign(static_cast<std::size_t>(total), true);

  LpSolution solution;
  // Phase 1: minimize the sum of artificials.
  Vector phase1 = Vector::Zero(total);
  bool any_artificial = false;
  for (Index i = 0; i < m; ++i) {
    if (needs_artificial[static_cast<std::size_t>(i)]) {
      phase1[art0 + i] = 1.0;
      any_artificial = true;
    }
  }
  if (any_artificial) {
    const LpStatus st = tab.minimize(phase1, max_iterations);
    if (st == LpStatus::IterationLimit) {
      solution.status = st;
      solution.iterations = tab.iterations;
      return solution;
    }
    double infeasibility = 0.0;
    for (Index i = 0; i < m; ++i)
      if (tab.basis[static_cast<std::size_t>(i)] >= art0) infeasibility += tab.rows(i, total);
    const double rhs_scale =
        std::max({1.0, m_eq ? program.eq_rhs.cwiseAbs().maxCoeff() : 0.0,
                  m_le ? program.le_rhs.cwiseAbs().maxCoeff() : 0.0});
    if (infeasibility > 1e-9 * rhs_scale) {
      solution.status = LpStatus::Infeasible;
      solution.iterations = tab.iterations;
      return solution;
    }
    // Drive remaining (zero-level) artificials out; drop redundant rows.
    std::vector<Index> keep;
    for (Index i = 0; i < m; ++i) {
      if (tab.basis[static_cast<std::size_t>(i)] < art0) {
        keep.push_back(i);
        continue;
      }
      Index col = -1;
      double best = kPivotTol;
      for (Index j = 0; j < art0; ++j) {
        if (std::abs(tab.rows(i, j)) > best) {
          best = std::abs(tab.rows(i, j));
          col = j;
        }
      }
      if (col >= 0) {
        tab.pivot(i, col);
        keep.push_back(i);
      }
    }
    if (static_cast<Index>(keep.size()) < m) {
      Matrix reduced(static_cast<Index>(keep.size()), total + 1);
      std::vector<Index> basis;
      for (std::size_t r = 0; r < keep.size(); ++r) {
        reduced.row(static_cast<Index>(r)) = tab.rows.row(keep[r]);
        basis.push_back(tab.basis[static_cast<std::size_t>(keep[r])]);
      }
      tab.rows = std::move(reduced);
      tab.basis = std::move(basis);
    }
    for (Index j = art0; j < total; ++j) tab.eligible[static_cast<std::size_t>(j)] = false;
  }

  Vector phase2 = Vector::Zero(total);
  phase2.head(n) = -program.objective;
  const LpStatus st = tab.minimize(phase2, max_iterations);
  solution.iterations = tab.iterations;
  if (st != LpStatus::Optimal) {
    solution.status = st;
    return solution;
  }

  // Re-solve B x_B = b on the original (sign-normalized) rows for accuracy.
  const Index rows_kept = tab.rows.rows();
  Matrix full(m, total);
  Vector rhs(m);
  full.setZero();
  for (Index i = 0; i < m_eq; ++i) {
    full.row(i).head(n) = program.eq_matrix.row(i);
    rhs[i] = program.eq_rhs[i];
  }
  for (Index k = 0; k < m_le; ++k) {
    full.row(m_eq + k).head(n) = program.le_matrix.row(k);
    full(m_eq + k, slack0 + k) = 1.0;
    rhs[m_eq + k] = program.le_rhs[k];
  }
  Matrix basis_cols(m, rows_kept);
  for (Index r = 0; r < rows_kept; ++r)
    basis_cols.col(r) = full.col(tab.basis[static_cast<std::size_t>(r)]);
  Vector xb = basis_cols.fullPivHouseholderQr().solve(rhs);
  const bool refined_ok = (basis_cols * xb - rhs).cwiseAbs().maxCoeff() <=
                          1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff());

  Vector x_all = Vector::Zero(total);
  for (Index r = 0; r < rows_kept; ++r) {
    const double tableau_value = tab.rows(r, tab.rows.cols() - 1);
    const double value = refined_ok ? xb[r] : tableau_value;
    x_all[tab.basis[static_cast<std::size_t>(r)]] = std::max(0.0, value);
  }
  solution.status = LpStatus::Optimal;
  solution.x = x_all.head(n);
  solution.value = program.objective.dot(solution.x);
  return solution;
}

}  // namespace wdro

#include "wdro/ot.hpp"

#include "wdro/error.hpp"
#include "wdro/lp.hpp"
#include "wdro/norms.hpp"
#include "wdro/optim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace wdro {

void DiscreteDistribution::validate() const {
  require(atoms.rows() > 0, "distribution has no atoms");
  require(weights.size() == atoms.rows(), "weight count must equal atom count");
  require((weights.array() >= 0.0).all(), "weights must be nonnegative");
  require(std::abs(weights.sum() - 1.0) <= 1e-12, "weights must sum to 1");
  require(atoms.allFinite(), "atoms must be finite");
}

DiscreteDistribution DiscreteDistribution::empirical(const Matrix& samples) {
  require(samples.rows() > 0, "empty sample");
  const Index n = samples.rows();
  return {samples, Vector::Constant(n, 1.0 / static_cast<double>(n))};
}

void CostSpec::validate(Index dim) const {
  require(q >= 1.0, "cost: q must be >= 1");
  require(r >= 1.0 && std::isfinite(r), "cost: r must be in [1, inf)");
  require(coord_weights.size() == 0 || coord_weights.size() == dim,
          "cost: coordinate weight count must match the dimension");
  require(coord_weights.size() == 0 || (coord_weights.array() >= 0.0).all(),
          "cost: coordinate weights must be nonnegative");
  if (regression_weight) require(*regression_weight > 0.0, "cost: regression weight a must be positive");
}

Vector CostSpec::effective_weights(Index dim) const {
  Vector w = coord_weights.size() == 0 ? Vector::Ones(dim) : coord_weights;
  if (regression_weight && dim > 0) w[dim - 1] *= std::sqrt(*regression_weight);
  return w;
}

double CostSpec::dual_exponent() const { return conjugate_exponent(q); }

double CostSpec::operator()(const Vector& x, const Vector& y) const {
  const Index m = x.size();
  const Vector w = effective_weights(m);
  Vector scaled(m);
  for (Index j = 0; j < m; ++j) {
    const double diff = x[j] - y[j];
    if (std::isinf(w[j])) {
      if (diff != 0.0) return kInf;
      scaled[j] = 0.0;
    } else {
      scaled[j] = w[j] * diff;
    }
  }
  return std::pow(lp_norm(scaled, q), r);
}

Matrix CostSpec::pairwise(const Matrix& a, const Matrix& b) const {
  require(a.cols() == b.cols(), "cost: dimension mismatch");
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    const Vector x = a.row(i).transpose();
    for (Index j = 0; j < b.rows(); ++j) out(i, j) = (*this)(x, b.row(j).transpose());
  }
  return out;
}

TransportResult transport_cost(const DiscreteDistribution& p, const DiscreteDistribution& q,
                               const CostSpec& cost) {
  p.validate();
  q.validate();
  require(p.dim() == q.dim(), "transport_cost: dimension mismatch");
  cost.validate(p.dim());
  const Matrix c = cost.pairwise(p.atoms, q.atoms);
  const Index k = p.size(), l = q.size();

  std::vector<std::pair<Index, Index>> vars;
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < l; ++j)
      if (std::isfinite(c(i, j))) vars.emplace_back(i, j);
  if (vars.empty()) fail(ErrorCode::InfeasibleCost, "every coupling has infinite cost");

  const Index nv = static_cast<Index>(vars.size());
  LinearProgram lp;
  lp.objective.resize(nv);
  lp.eq_matrix = Matrix::Zero(k + l, nv);
  lp.eq_rhs.resize(k + l);
  lp.eq_rhs << p.weights, q.weights;
  for (Index v = 0; v < nv; ++v) {
    const auto [i, j] = vars[static_cast<std::size_t>(v)];
    lp.objective[v] = -c(i, j);
    lp.eq_matrix(i, v) = 1.0;
    lp.eq_matrix(k + j, v) = 1.0;
  }
  const LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::Infeasible) fail(ErrorCode::InfeasibleCost, "every coupling has infinite cost");
  if (sol.status != LpStatus::Optimal) fail(ErrorCode::Unsupported, "transport LP did not converge");

  TransportResult out;
  out.value = std::max(0.0, -sol.value);
  out.coupling.plan = Matrix::Zero(k, l);
  for (Index v = 0; v < nv; ++v) {
    const auto [i, j] = vars[static_cast<std::size_t>(v)];
    out.coupling.plan(i, j) = sol.x[v];
  }
  out.coupling.row_marginal = p.weights;
  out.coupling.col_marginal = q.weights;
  return out;
}

namespace {

void check_worstcase_inputs(const Matrix& support, const Vector& f, const DiscreteDistribution& reference,
                            double delta, const CostSpec& cost) {
  reference.validate();
  require(support.rows() > 0, "candidate support is empty");
  require(support.rows() == f.size(), "one f value per candidate point is required");
  require(support.cols() == reference.dim(), "support and reference dimensions differ");
  require(f.allFinite(), "f must be finite on the candidate support");
  require(delta >= 0.0 && std::isfinite(delta), "delta must be a finite nonnegative number");
  cost.validate(reference.dim());
}

}  // namespace

WorstCasePrimal worstcase_expectation_primal(const Matrix& support, const Vector& f,
                                             const DiscreteDistribution& reference, double delta,
                                             const CostSpec& cost) {
  check_worstcase_inputs(support, f, reference, delta, cost);
  const Matrix c = cost.pairwise(reference.atoms, support);
  const Index k = reference.size(), l = support.rows();

  std::vector<std::pair<Index, Index>> vars;
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < l; ++j)
      if (std::isfinite(c(i, j))) vars.emplace_back(i, j);
  if (vars.empty()) fail(ErrorCode::InfeasibleCost, "no reference atom can reach the candidate support");

  const Index nv = static_cast<Index>(vars.size());
  LinearProgram lp;
  lp.objective.resize(nv);
  lp.eq_matrix = Matrix::Zero(k, nv);
  lp.eq_rhs = reference.weights;
  lp.le_matrix = Matrix::Zero(1, nv);
  lp.le_rhs = Vector::Constant(1, delta);
  for (Index v = 0; v < nv; ++v) {
    const auto [i, j] = vars[static_cast<std::size_t>(v)];
    lp.objective[v] = f[j];
    lp.eq_matrix(i, v) = 1.0;
    lp.le_matrix(0, v) = c(i, j);
  }
  const LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::Infeasible)
    fail(ErrorCode::InfeasibleCost, "the budget cannot accommodate any coupling");
  if (sol.status != LpStatus::Optimal) fail(ErrorCode::Unsupported, "worst-case LP did not converge");

  WorstCasePrimal out;
  out.value = sol.value;
  out.coupling.plan = Matrix::Zero(k, l);
  for (Index v = 0; v < nv; ++v) {
    const auto [i, j] = vars[static_cast<std::size_t>(v)];
    out.coupling.plan(i, j) = sol.x[v];
    out.budget_used += c(i, j) * sol.x[v];
  }
  out.coupling.row_marginal = reference.weights;
  out.coupling.col_marginal = out.coupling.plan.colwise().sum().transpose();
  return out;
}

WorstCaseDual worstcase_expectation_dual(const Matrix& support, const Vector& f,
                                         const DiscreteDistribution& reference, double delta,
                                         const CostSpec& cost) {
  check_worstcase_inputs(support, f, reference, delta, cost);
  const Matrix c = cost.pairwise(reference.atoms, support);
  const Index k = reference.size(), l = support.rows();

  // Value each atom keeps at no cost, and the λ beyond which moving never pays.
  Vector stay(k);
  double lambda_sat = 0.0;
  for (Index i = 0; i < k; ++i) {
    double best = -kInf;
    for (Index j = 0; j < l; ++j)
      if (c(i, j) == 0.0) best = std::max(best, f[j]);
    require(std::isfinite(best), "every reference atom must belong to the candidate support");
    stay[i] = best;
  }
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < l; ++j)
      if (c(i, j) > 0.0 && std::isfinite(c(i, j)) && f[j] > stay[i])
        lambda_sat = std::max(lambda_sat, (f[j] - stay[i]) / c(i, j));

  auto g = [&](double lambda) {
    double total = lambda * delta;
    for (Index i = 0; i < k; ++i) {
      double best = -kInf;
      for (Index j = 0; j < l; ++j)
        if (std::isfinite(c(i, j))) best = std::max(best, f[j] - lambda * c(i, j));
      total += reference.weights[i] * best;
    }
    return total;
  };

  if (delta == 0.0 || lambda_sat == 0.0) {
    const double lambda = delta == 0.0 ? lambda_sat : 0.0;
    return {g(lambda), lambda};
  }

  // The dual objective is convex and grows with slope δ past lambda_sat.
  double hi = std::min(1.0, lambda_sat);
  while (hi < lambda_sat && g(std::min(2.0 * hi, lambda_sat)) < g(hi)) hi = std::min(2.0 * hi, lambda_sat);
  hi = std::min(2.0 * hi, lambda_sat);

  ScalarMinimum best = golden_section_minimize(g, 0.0, hi, 1e-15);
  const double g0 = g(0.0);
  if (g0 <= best.value + 1e-14 * (1.0 + std::abs(best.value))) best = {0.0, g0};
  return {best.value, best.x};
}

}  // namespace wdro

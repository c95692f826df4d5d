#include "wdro/error.hpp"
#include "wdro/lp.hpp"
#include "wdro/ot.hpp"
#include "wdro/rng.hpp"

#include "../oracles/vertex_enum.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace wdro;

namespace {

DiscreteDistribution random_distribution(SplitMix64& rng, Index atoms, Index dim) {
  std::uniform_real_distribution<double> w(0.1, 1.0);
  DiscreteDistribution d;
  d.atoms.resize(atoms, dim);
  for (Index i = 0; i < atoms; ++i) d.atoms.row(i) = standard_normal_vector(rng, dim).transpose();
  d.weights.resize(atoms);
  for (Index i = 0; i < atoms; ++i) d.weights[i] = w(rng);
  d.weights /= d.weights.sum();
  return d;
}

struct WorstCaseInstance {
  Matrix support;
  Vector f;
  DiscreteDistribution ref;
};

WorstCaseInstance random_worstcase(SplitMix64& rng, Index m, Index k, Index dim) {
  WorstCaseInstance w;
  w.ref = random_distribution(rng, k, dim);
  w.support.resize(m, dim);
  w.support.topRows(k) = w.ref.atoms;
  for (Index i = k; i < m; ++i) w.support.row(i) = standard_normal_vector(rng, dim).transpose();
  w.f = standard_normal_vector(rng, m);
  return w;
}

}  // namespace

TEST(LinearProgram, SmallKnownOptimum) {
  // max 3x + 2y  s.t.  x + y ≤ 4, x + 3y ≤ 6, x ≤ 3
  LinearProgram lp;
  lp.objective = (Vector(2) << 3, 2).finished();
  lp.le_matrix = (Matrix(3, 2) << 1, 1, 1, 3, 1, 0).finished();
  lp.le_rhs = (Vector(3) << 4, 6, 3).finished();
  const LpSolution s = solve_lp(lp);
  ASSERT_EQ(s.status, LpStatus::Optimal);
  EXPECT_NEAR(s.value, 11.0, 1e-12);
  EXPECT_NEAR(s.x[0], 3.0, 1e-12);
  EXPECT_NEAR(s.x[1], 1.0, 1e-12);
}

TEST(LinearProgram, DetectsInfeasibleAndUnbounded) {
  LinearProgram infeasible;
  infeasible.objective = Vector::Ones(1);
  infeasible.eq_matrix = Matrix::Ones(1, 1);
  infeasible.eq_rhs = Vector::Constant(1, -1.0);
  EXPECT_EQ(solve_lp(infeasible).status, LpStatus::Infeasible);

  LinearProgram unbounded;
  unbounded.objective = Vector::Ones(2);
  unbounded.le_matrix = (Matrix(1, 2) << 1, -1).finished();
  unbounded.le_rhs = Vector::Ones(1);
  EXPECT_EQ(solve_lp(unbounded).status, LpStatus::Unbounded);
}

TEST(Transport, IdenticalDistributionsCostNothing) {
  SplitMix64 rng(1);
  const DiscreteDistribution p = random_distribution(rng, 4, 2);
  const TransportResult r = transport_cost(p, p, CostSpec{});
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  EXPECT_LT((r.coupling.plan - Matrix(p.weights.asDiagonal())).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Transport, SinglePairIsTheCost) {
  DiscreteDistribution p{Matrix::Zero(1, 2), Vector::Ones(1)};
  DiscreteDistribution q{(Matrix(1, 2) << 3, 4).finished(), Vector::Ones(1)};
  EXPECT_NEAR(transport_cost(p, q, CostSpec{}).value, 25.0, 1e-12);
}

TEST(Transport, MatchesVertexEnumeration) {
  SplitMix64 rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const DiscreteDistribution p = random_distribution(rng, 4, 2);
    const DiscreteDistribution q = random_distribution(rng, 5, 2);
    CostSpec cost;
    cost.q = rep % 2 ? 1.0 : 2.0;
    cost.r = rep % 3 ? 2.0 : 1.0;
    const TransportResult r = transport_cost(p, q, cost);
    const double want = oracle::transport_by_vertices(p.weights, q.weights, cost.pairwise(p.atoms, q.atoms));
    EXPECT_NEAR(r.value, want, 1e-9);
    EXPECT_LT((r.coupling.plan.rowwise().sum() - r.coupling.row_marginal).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((r.coupling.plan.colwise().sum().transpose() - r.coupling.col_marginal).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((r.coupling.row_marginal - p.weights).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Transport, SymmetricInItsArguments) {
  SplitMix64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const DiscreteDistribution p = random_distribution(rng, 3, 3);
    const DiscreteDistribution q = random_distribution(rng, 4, 3);
    EXPECT_NEAR(transport_cost(p, q, CostSpec{}).value, transport_cost(q, p, CostSpec{}).value, 1e-10);
  }
}

TEST(Transport, PinnedCoordinateMustMatch) {
  DiscreteDistribution p{(Matrix(1, 2) << 0, 0).finished(), Vector::Ones(1)};
  DiscreteDistribution q{(Matrix(1, 2) << 1, 1).finished(), Vector::Ones(1)};
  CostSpec cost;
  cost.coord_weights = (Vector(2) << 1, kInf).finished();
  try {
    transport_cost(p, q, cost);
    FAIL() << "expected InfeasibleCost";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleCost);
  }
  q.atoms(0, 1) = 0.0;
  EXPECT_NEAR(transport_cost(p, q, cost).value, 1.0, 1e-12);
}

TEST(Distribution, ValidationRejectsBadWeights) {
  DiscreteDistribution d{Matrix::Zero(2, 1), (Vector(2) << 0.5, 0.6).finished()};
  EXPECT_THROW(d.validate(), Error);
  d.weights << 0.5, 0.5;
  EXPECT_NO_THROW(d.validate());
  d.weights = Vector::Ones(3) / 3.0;
  EXPECT_THROW(d.validate(), Error);
}

TEST(WorstCase, ZeroBudgetIsTheReferenceMean) {
  SplitMix64 rng(4);
  const auto w = random_worstcase(rng, 5, 3, 2);
  const double mean = w.ref.weights.dot(w.f.head(3));
  EXPECT_NEAR(worstcase_expectation_primal(w.support, w.f, w.ref, 0.0, CostSpec{}).value, mean, 1e-10);
  EXPECT_NEAR(worstcase_expectation_dual(w.support, w.f, w.ref, 0.0, CostSpec{}).value, mean, 1e-10);
}

TEST(WorstCase, LargeBudgetReachesTheMaximum) {
  SplitMix64 rng(5);
  const auto w = random_worstcase(rng, 5, 3, 2);
  Index best;
  w.f.maxCoeff(&best);
  double need = 0.0;
  for (Index i = 0; i < 3; ++i) need = std::max(need, CostSpec{}(w.ref.atoms.row(i).transpose(), w.support.row(best).transpose()));
  EXPECT_NEAR(worstcase_expectation_primal(w.support, w.f, w.ref, need, CostSpec{}).value, w.f.maxCoeff(), 1e-9);
  EXPECT_NEAR(worstcase_expectation_dual(w.support, w.f, w.ref, need, CostSpec{}).value, w.f.maxCoeff(), 1e-9);
}

TEST(WorstCase, TwoAtomHandInstance) {
  const Matrix support = (Matrix(2, 1) << 0, 1).finished();
  const Vector f = (Vector(2) << 0, 1).finished();
  const DiscreteDistribution ref{Matrix::Zero(1, 1), Vector::Ones(1)};
  CostSpec cost;
  cost.r = 1.0;
  EXPECT_NEAR(worstcase_expectation_primal(support, f, ref, 0.3, cost).value, 0.3, 1e-12);
  EXPECT_NEAR(worstcase_expectation_dual(support, f, ref, 0.3, cost).value, 0.3, 1e-12);
}

// The dual LP  min λδ + Σ p_i ν_i  s.t.  ν_i + λ c_ij ≥ f_j,  λ ≥ 0, written
// as a maximization of −(λδ + Σ p_i ν_i) with ν split into ν⁺ − ν⁻.
TEST(WorstCase, ExplicitDualLpMatchesPrimal) {
  SplitMix64 rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const auto w = random_worstcase(rng, 4, 4, 2);
    const double delta = 0.2 + 0.1 * rep;
    const Matrix c = CostSpec{}.pairwise(w.ref.atoms, w.support);
    const Index k = 4, m = 4;
    LinearProgram lp;
    lp.objective = Vector::Zero(1 + 2 * k);
    lp.objective[0] = -delta;
    lp.objective.segment(1, k) = -w.ref.weights;
    lp.objective.segment(1 + k, k) = w.ref.weights;
    lp.le_matrix = Matrix::Zero(k * m, 1 + 2 * k);
    lp.le_rhs = Vector::Zero(k * m);
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < m; ++j) {
        const Index row = i * m + j;
        lp.le_matrix(row, 0) = -c(i, j);
        lp.le_matrix(row, 1 + i) = -1.0;
        lp.le_matrix(row, 1 + k + i) = 1.0;
        lp.le_rhs[row] = -w.f[j];
      }
    const LpSolution s = solve_lp(lp);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_NEAR(-s.value, worstcase_expectation_primal(w.support, w.f, w.ref, delta, CostSpec{}).value, 1e-8);
  }
}

TEST(WorstCaseProperty, StrongDualityAndBudgetUse) {
  SplitMix64 rng(7);
  std::uniform_int_distribution<int> atoms(2, 6), dims(1, 3);
  std::uniform_real_distribution<double> rad(0.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const Index m = atoms(rng), k = std::uniform_int_distribution<Index>(1, m)(rng);
    const auto w = random_worstcase(rng, m, k, dims(rng));
    CostSpec cost;
    cost.q = rep % 3 == 0 ? 1.0 : 2.0;
    cost.r = rep % 2 == 0 ? 1.0 : 2.0;
    const double delta = rad(rng);
    const auto primal = worstcase_expectation_primal(w.support, w.f, w.ref, delta, cost);
    const auto dual = worstcase_expectation_dual(w.support, w.f, w.ref, delta, cost);
    ASSERT_NEAR(primal.value, dual.value, 1e-8);
    if (dual.lambda > 1e-8) EXPECT_NEAR(primal.budget_used, delta, 1e-7);
  }
}

TEST(WorstCaseProperty, NondecreasingAndConcaveInBudget) {
  SplitMix64 rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const auto w = random_worstcase(rng, 6, 3, 2);
    std::vector<double> values;
    for (int i = 0; i <= 20; ++i) values.push_back(worstcase_expectation_primal(w.support, w.f, w.ref, 0.1 * i, CostSpec{}).value);
    for (std::size_t i = 1; i < values.size(); ++i) EXPECT_GE(values[i], values[i - 1] - 1e-10);
    for (std::size_t i = 1; i + 1 < values.size(); ++i) EXPECT_GE(values[i], 0.5 * (values[i - 1] + values[i + 1]) - 1e-9);
  }
}

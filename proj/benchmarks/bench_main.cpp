#include "wdro/estimators.hpp"
#include "wdro/ot.hpp"
#include "wdro/profile.hpp"
#include "wdro/radius.hpp"
#include "wdro/rng.hpp"
#include "wdro/simlab.hpp"

#include <benchmark/benchmark.h>

using namespace wdro;

namespace {

Matrix gaussian_rows(Index n, Index d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix out(n, d);
  for (Index i = 0; i < n; ++i) out.row(i) = standard_normal_vector(rng, d).transpose();
  return out;
}

CostSpec pinned() {
  CostSpec c;
  c.regression_weight = kInf;
  return c;
}

}  // namespace

void BM_TransportCost(benchmark::State& state) {
  const Index n = state.range(0);
  const auto p = DiscreteDistribution::empirical(gaussian_rows(n, 2, 1));
  const auto q = DiscreteDistribution::empirical(gaussian_rows(n, 2, 2));
  for (auto _ : state) benchmark::DoNotOptimize(transport_cost(p, q, CostSpec{}).value);
}
BENCHMARK(BM_TransportCost)->Arg(10)->Arg(20)->Arg(40);

void BM_WorstCasePrimal(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix support = gaussian_rows(n, 1, 3);
  const Vector f = support.col(0).array().square();
  const auto ref = DiscreteDistribution::empirical(support);
  for (auto _ : state)
    benchmark::DoNotOptimize(worstcase_expectation_primal(support, f, ref, 0.1, CostSpec{}).value);
}
BENCHMARK(BM_WorstCasePrimal)->Arg(10)->Arg(30);

void BM_SqrtLasso(benchmark::State& state) {
  RegressionSpec spec;
  spec.theta_star = Vector::Constant(state.range(1), 0.5);
  const Matrix rows = generate_regression(spec, static_cast<std::size_t>(state.range(0)), 4, 0);
  for (auto _ : state) benchmark::DoNotOptimize(fit_sqrt_lasso(rows, 0.01, 2.0).theta);
}
BENCHMARK(BM_SqrtLasso)->Args({100, 2})->Args({1000, 2})->Args({1000, 10});

void BM_EstimateRadius(benchmark::State& state) {
  const Matrix rows = generate_regression(RegressionSpec{}, 100, 5, 0);
  const RegressionModel model(2);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        estimate_radius(model, rows, 0.05, static_cast<std::size_t>(state.range(0)), 6, pinned()).delta);
}
BENCHMARK(BM_EstimateRadius)->Arg(1000)->Arg(10000);

void BM_MeanProfile(benchmark::State& state) {
  const Matrix x = gaussian_rows(state.range(0), 2, 7);
  const MeanModel model(2);
  const Vector theta = x.colwise().mean().transpose() + Vector::Constant(2, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(scaled_profile_stat(model, x, theta, CostSpec{}));
}
BENCHMARK(BM_MeanProfile)->Arg(100)->Arg(1000);

BENCHMARK_MAIN();

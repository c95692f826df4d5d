#pragma once

#include "wdro/model.hpp"
#include "wdro/ot.hpp"
#include "wdro/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace wdro {

/// Y = θ*ᵀX + ε, X ~ N(0, Ξ) with unit variances and pairwise correlation ρ,
/// ε ~ N(0, σ²).
struct RegressionSpec {
  Vector theta_star = Vector::Constant(2, 0.5);
  double rho = 0.0;
  double sigma2 = 1.0;

  Matrix xi() const;
};

enum class RadiusRuleKind { Fixed, Power, Algorithm1 };

struct RadiusRule {
  RadiusRuleKind kind = RadiusRuleKind::Algorithm1;
  double delta = 0.0;   // Fixed
  double c = 1.0;       // Power: c · n^{−γ}
  double gamma = 1.0;
  double alpha = 0.05;  // Algorithm1
  std::size_t k = 0;    // Algorithm1 draws; 0 means default_draws(alpha)

  std::string describe() const;
};

struct SimConfig {
  RegressionSpec model;
  std::size_t n = 100;
  std::size_t replications = 1000;
  RadiusRule radius;
  std::uint64_t seed = 0;
  double p = 2.0;  // norm of the DRO penalty (sqrt-lasso)

  void validate() const;
};

/// One data set of size n from stream `index` under `seed`. Rows are (x, y).
Matrix generate_regression(const RegressionSpec& spec, std::size_t n, std::uint64_t seed, std::uint64_t index);

/// Radius for a data set under the rule; the limit-law rule uses stream `index`.
double resolve_radius(const RadiusRule& rule, const Matrix& samples, std::uint64_t seed, std::uint64_t index);

struct ScatterReport {
  std::vector<Vector> erm;
  std::vector<Vector> dro;
  std::vector<double> delta;
  Vector var_erm;
  Vector var_dro;
  Vector variance_ratio;  // DRO / ERM per coordinate
  double mean_norm_erm = 0.0;
  double mean_norm_dro = 0.0;
};

ScatterReport simulate_scatter(const SimConfig& config);

struct BiasTerm {
  Vector b;
  double c = 0.0;
  Matrix c_inverse;
  Vector grad_v;
};

/// b_c = √c · C⁻¹ · D_θV(θ) with D_θV by central differences (step
/// 1e-5·(1 + ‖θ‖)). Throws ZeroVariation when V(θ) ≤ 1e-12.
BiasTerm bias_term(const std::function<double(const Vector&)>& variation, const Matrix& c_matrix,
                   const Vector& theta, double c);

/// Empirical version: V = variation_norm under the cost, C = mean D_θh.
BiasTerm bias_term(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                   const CostSpec& cost, double c);

/// Population version for the regression spec with the response pinned:
/// V(θ) = 2‖θ‖₂ √(σ² + (θ − θ*)ᵀΞ(θ − θ*)), C = 2Ξ, evaluated at θ*.
BiasTerm regression_bias_term(const RegressionSpec& spec, double c);

struct CltRow {
  std::size_t n = 0;
  double delta = 0.0;
  Vector mean_scaled_gap;  // mean of √n(θ_dro − θ_erm)
  Vector se_scaled_gap;    // its Monte Carlo standard error
  double mean_scaled_gap_norm = 0.0;  // mean of √n‖θ_dro − θ_erm‖
  double mean_error_norm = 0.0;       // mean of ‖θ_dro − θ*‖
};

struct CltReport {
  double c = 0.0;
  double gamma = 0.0;
  std::vector<CltRow> rows;
  BiasTerm bias;             // population b_c
  double log_log_slope = 0.0;  // least-squares slope of log mean_error_norm on log n
};

/// Power rule δ = c · n^{−γ} over each sample size in `sizes`.
CltReport simulate_clt(const SimConfig& config, const std::vector<std::size_t>& sizes);

struct CoverageReport {
  double alpha = 0.0;
  std::size_t replications = 0;
  double coverage_theta_star = 0.0;
  double coverage_erm = 0.0;
  double coverage_dro = 0.0;
  double standard_error = 0.0;  // binomial SE of coverage_theta_star
  std::size_t containment_failures = 0;  // replications where Λ̂ ⊄ Λ̂⁽ᵏ⁾
  std::vector<double> eta;
  std::vector<unsigned char> covered;  // θ* verdict per replication
};

/// Confidence regions on fresh data sets; θ_dro is fitted at δ = η̂/n.
CoverageReport simulate_coverage(const SimConfig& config, double alpha, std::size_t directions = 2000);

/// Finite instance for the inf-sup check: ℓ(x_j, θ) = slope_j·θ + offset_j
/// for scalar θ in [lo, hi]; the ambiguity set is the transport ball around
/// the reference weights on the same support.
struct InfSupInstance {
  Matrix support;
  Vector reference;
  Vector slope;
  Vector offset;
  double lo = -1.0;
  double hi = 1.0;
  double delta = 0.0;
  CostSpec cost;
};

struct InfSupReport {
  double minmax = 0.0;  // min over the θ grid of the worst-case LP
  double maxmin = 0.0;  // exact: epigraph LP over the ambiguity polytope
  double gap = 0.0;
  double bound = 0.0;   // L · h with L = max|slope|, h the grid spacing
  double theta_hat = 0.0;
  Vector p_hat;         // marginal of the max-min distribution on the support
  double nash_slack = 0.0;  // largest violation of the ε-Nash inequalities (≤ 0 passes)
  bool nash_ok = false;
  std::size_t grid_points = 0;
};

InfSupReport infsup_gap(const InfSupInstance& instance, std::size_t grid_points);

/// Instance `index` of a seeded family: `atoms` points uniform in [−1, 1],
/// random reference weights, slopes and offsets in [−1, 1], δ in [0.05, 0.5].
InfSupInstance random_infsup_instance(std::uint64_t seed, std::uint64_t index, Index atoms);

/// n^{−1/2} [48𝒞 + 48 L diam^r δ^{−1+1/r} + (3M/√2) log(2/ε)].
double finite_sample_bound(double M, double L, double diam, double r, double dudley, double delta, double eps,
                           double n);

struct FairnessSimConfig {
  std::size_t n = 500;
  std::size_t replications = 2000;
  double alpha = 0.05;
  Vector theta = (Vector(2) << 1.0, -0.5).finished();
  std::uint64_t seed = 0;
};

/// Group-balanced data: A, Y ~ Bernoulli(½) independent, X | Y ~ N(μ_Y, I)
/// regardless of A, so equal opportunity holds exactly.
void generate_fair_data(std::size_t n, Index dim, std::uint64_t seed, std::uint64_t index, Matrix& features,
                        Vector& attribute, Vector& label);

struct FairnessSimReport {
  double rejection_rate = 0.0;
  double standard_error = 0.0;
  std::vector<double> statistics;
};

FairnessSimReport simulate_fairness(const FairnessSimConfig& config);

}  // namespace wdro

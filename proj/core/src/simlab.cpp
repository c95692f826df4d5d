#include "wdro/simlab.hpp"

#include "wdro/error.hpp"
#include "wdro/estimators.hpp"
#include "wdro/inference.hpp"
#include "wdro/lp.hpp"
#include "wdro/norms.hpp"
#include "wdro/parallel.hpp"
#include "wdro/radius.hpp"
#include "wdro/rng.hpp"
#include "wdro/worstcase.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wdro {
namespace {

constexpr std::uint64_t kRadiusStream = 0x7261646975ULL;
constexpr std::uint64_t kRegionStream = 0x726567696fULL;

CostSpec regression_cost(double p) {
  CostSpec cost;
  cost.q = conjugate_exponent(p);
  cost.r = 2.0;
  cost.regression_weight = kInf;
  return cost;
}

Vector column_variance(const std::vector<Vector>& rows) {
  const Index d = rows.front().size();
  Vector mean = Vector::Zero(d);
  for (const Vector& r : rows) mean += r;
  mean /= static_cast<double>(rows.size());
  Vector var = Vector::Zero(d);
  for (const Vector& r : rows) var += (r - mean).cwiseAbs2();
  return var / static_cast<double>(std::max<std::size_t>(rows.size() - 1, 1));
}

}  // namespace

Matrix RegressionSpec::xi() const {
  const Index d = theta_star.size();
  Matrix out = Matrix::Constant(d, d, rho);
  out.diagonal().setOnes();
  return out;
}

std::string RadiusRule::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case RadiusRuleKind::Fixed: os << "fixed(" << delta << ")"; break;
    case RadiusRuleKind::Power: os << "power(c=" << c << ",gamma=" << gamma << ")"; break;
    case RadiusRuleKind::Algorithm1: os << "algorithm1(alpha=" << alpha << ",k=" << k << ")"; break;
  }
  return os.str();
}

void SimConfig::validate() const {
  require(replications >= 1, "replications must be at least 1");
  require(n >= 2, "n must be at least 2");
  require(model.theta_star.size() >= 1, "theta_star must be nonempty");
  require(std::abs(model.rho) < 1.0, "|rho| must be < 1");
  require(model.sigma2 > 0.0, "sigma2 must be positive");
  require(p == 1.0 || p == 2.0, "DRO penalty p must be 1 or 2");
  if (radius.kind == RadiusRuleKind::Power) require(radius.gamma > 0.0 && radius.c >= 0.0, "power rule needs gamma > 0, c >= 0");
  if (radius.kind == RadiusRuleKind::Fixed) require(radius.delta >= 0.0, "fixed radius must be nonnegative");
  if (radius.kind == RadiusRuleKind::Algorithm1) require(radius.alpha > 0.0 && radius.alpha < 1.0, "alpha must be in (0, 1)");
}

Matrix generate_regression(const RegressionSpec& spec, std::size_t n, std::uint64_t seed, std::uint64_t index) {
  const Index d = spec.theta_star.size();
  const Matrix L = spec.xi().llt().matrixL();
  const double sigma = std::sqrt(spec.sigma2);
  SplitMix64 engine = make_stream(seed, index);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix rows(static_cast<Index>(n), d + 1);
  Vector z(d);
  for (Index i = 0; i < static_cast<Index>(n); ++i) {
    for (Index j = 0; j < d; ++j) z[j] = normal(engine);
    const Vector x = L * z;
    rows.row(i).head(d) = x.transpose();
    rows(i, d) = spec.theta_star.dot(x) + sigma * normal(engine);
  }
  return rows;
}

double resolve_radius(const RadiusRule& rule, const Matrix& samples, std::uint64_t seed, std::uint64_t index) {
  const double n = static_cast<double>(samples.rows());
  switch (rule.kind) {
    case RadiusRuleKind::Fixed: return rule.delta;
    case RadiusRuleKind::Power: return rule.c * std::pow(n, -rule.gamma);
    case RadiusRuleKind::Algorithm1: {
      const RegressionModel model(samples.cols() - 1);
      const std::size_t k = rule.k == 0 ? default_draws(rule.alpha) : rule.k;
      return estimate_radius(model, samples, rule.alpha, k, stream_seed(stream_seed(seed, index), kRadiusStream),
                             regression_cost(2.0))
          .delta;
    }
  }
  return 0.0;
}

ScatterReport simulate_scatter(const SimConfig& config) {
  config.validate();
  const std::size_t reps = config.replications;
  ScatterReport rep;
  rep.erm.resize(reps);
  rep.dro.resize(reps);
  rep.delta.resize(reps);
  parallel_for(reps, [&](std::size_t r) {
    const Matrix data = generate_regression(config.model, config.n, config.seed, r);
    rep.delta[r] = resolve_radius(config.radius, data, config.seed, r);
    rep.erm[r] = fit_erm_ols(data).theta;
    rep.dro[r] = fit_sqrt_lasso(data, rep.delta[r], config.p).theta;
  });
  rep.var_erm = column_variance(rep.erm);
  rep.var_dro = column_variance(rep.dro);
  rep.variance_ratio = rep.var_dro.cwiseQuotient(rep.var_erm);
  for (std::size_t r = 0; r < reps; ++r) {
    rep.mean_norm_erm += rep.erm[r].norm();
    rep.mean_norm_dro += rep.dro[r].norm();
  }
  rep.mean_norm_erm /= static_cast<double>(reps);
  rep.mean_norm_dro /= static_cast<double>(reps);
  return rep;
}

BiasTerm bias_term(const std::function<double(const Vector&)>& variation, const Matrix& c_matrix,
                   const Vector& theta, double c) {
  require(c >= 0.0, "c must be nonnegative");
  const Index d = theta.size();
  require(c_matrix.rows() == d && c_matrix.cols() == d, "C must be d x d");
  if (!(variation(theta) > 1e-12)) fail(ErrorCode::ZeroVariation, "V(theta) vanishes; its gradient is singular");
  Eigen::JacobiSVD<Matrix> svd(c_matrix);
  const Vector sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[d - 1] <= 1e-12 * sv[0]) fail(ErrorCode::SingularHessian, "C is singular");

  BiasTerm out;
  out.c = c;
  out.c_inverse = c_matrix.inverse();
  out.grad_v.resize(d);
  const double step = 1e-5 * (1.0 + theta.norm());
  for (Index j = 0; j < d; ++j) {
    Vector up = theta, down = theta;
    up[j] += step;
    down[j] -= step;
    out.grad_v[j] = (variation(up) - variation(down)) / (2.0 * step);
  }
  out.b = std::sqrt(c) * out.c_inverse * out.grad_v;
  return out;
}

BiasTerm bias_term(const EstimatingModel& model, const Matrix& samples, const Vector& theta,
                   const CostSpec& cost, double c) {
  Matrix C = Matrix::Zero(model.param_dim(), model.param_dim());
  for (Index i = 0; i < samples.rows(); ++i) C += model.jac_theta_h(samples.row(i).transpose(), theta);
  C /= static_cast<double>(samples.rows());
  return bias_term([&](const Vector& t) { return variation_norm(model, samples, t, cost); }, C, theta, c);
}

BiasTerm regression_bias_term(const RegressionSpec& spec, double c) {
  const Matrix xi = spec.xi();
  auto variation = [&](const Vector& t) {
    const Vector diff = t - spec.theta_star;
    return 2.0 * t.norm() * std::sqrt(spec.sigma2 + diff.dot(xi * diff));
  };
  return bias_term(variation, 2.0 * xi, spec.theta_star, c);
}

CltReport simulate_clt(const SimConfig& config, const std::vector<std::size_t>& sizes) {
  config.validate();
  require(config.radius.kind == RadiusRuleKind::Power, "simulate_clt needs the power radius rule");
  require(!sizes.empty(), "need at least one sample size");
  CltReport out;
  out.c = config.radius.c;
  out.gamma = config.radius.gamma;
  out.bias = regression_bias_term(config.model, config.radius.c);
  const Index d = config.model.theta_star.size();
  const std::size_t reps = config.replications;

  for (std::size_t n : sizes) {
    require(n >= static_cast<std::size_t>(d) + 1, "sample size too small");
    CltRow row;
    row.n = n;
    row.delta = config.radius.c * std::pow(static_cast<double>(n), -config.radius.gamma);
    std::vector<Vector> scaled(reps);
    std::vector<double> err(reps);
    const std::uint64_t size_seed = stream_seed(config.seed, n);
    parallel_for(reps, [&](std::size_t r) {
      const Matrix data = generate_regression(config.model, n, size_seed, r);
      const Vector erm = fit_erm_ols(data).theta;
      const Vector dro = fit_sqrt_lasso(data, row.delta, config.p).theta;
      scaled[r] = std::sqrt(static_cast<double>(n)) * (dro - erm);
      err[r] = (dro - config.model.theta_star).norm();
    });
    row.mean_scaled_gap = Vector::Zero(d);
    for (std::size_t r = 0; r < reps; ++r) {
      row.mean_scaled_gap += scaled[r];
      row.mean_scaled_gap_norm += scaled[r].norm();
      row.mean_error_norm += err[r];
    }
    const double R = static_cast<double>(reps);
    row.mean_scaled_gap /= R;
    row.mean_scaled_gap_norm /= R;
    row.mean_error_norm /= R;
    row.se_scaled_gap = (column_variance(scaled) / R).cwiseSqrt();
    out.rows.push_back(std::move(row));
  }

  if (out.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(out.rows.size());
    for (const CltRow& row : out.rows) {
      const double x = std::log(static_cast<double>(row.n));
      const double y = std::log(row.mean_error_norm);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    out.log_log_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return out;
}

CoverageReport simulate_coverage(const SimConfig& config, double alpha, std::size_t directions) {
  config.validate();
  require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  const std::size_t reps = config.replications;
  const Index d = config.model.theta_star.size();
  const RegressionModel model(d);
  const CostSpec cost = regression_cost(2.0);

  CoverageReport out;
  out.alpha = alpha;
  out.replications = reps;
  out.eta.resize(reps);
  out.covered.resize(reps);
  std::vector<unsigned char> cover_erm(reps), cover_dro(reps), contained(reps);
  parallel_for(reps, [&](std::size_t r) {
    const Matrix data = generate_regression(config.model, config.n, config.seed, r);
    RegionOptions options;
    options.alpha = alpha;
    options.directions = directions;
    options.draws = config.radius.kind == RadiusRuleKind::Algorithm1 ? config.radius.k : 0;
    options.seed = stream_seed(stream_seed(config.seed, r), kRegionStream);
    const RegionResult region = build_region(model, data, cost, options);
    const double eta = region.radius.quantile.eta;
    const Vector dro = fit_sqrt_lasso(data, eta / static_cast<double>(data.rows()), config.p).theta;
    auto inside = [&](const Vector& t) {
      return region.ellipsoid ? region_contains(*region.ellipsoid, t) : region_contains(region.halfspaces, t);
    };
    out.eta[r] = eta;
    out.covered[r] = inside(config.model.theta_star);
    cover_erm[r] = inside(region.radius.theta_erm);
    cover_dro[r] = inside(dro);
    contained[r] = !region.ellipsoid || ellipsoid_halfspace_ratio(region.halfspaces, *region.ellipsoid) <= 1.0 + 1e-9;
  });
  const double R = static_cast<double>(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    out.coverage_theta_star += out.covered[r];
    out.coverage_erm += cover_erm[r];
    out.coverage_dro += cover_dro[r];
    if (!contained[r]) ++out.containment_failures;
  }
  out.coverage_theta_star /= R;
  out.coverage_erm /= R;
  out.coverage_dro /= R;
  out.standard_error = std::sqrt(out.coverage_theta_star * (1.0 - out.coverage_theta_star) / R);
  return out;
}

InfSupReport infsup_gap(const InfSupInstance& inst, std::size_t grid_points) {
  require(grid_points >= 2, "need at least two grid points");
  require(inst.lo < inst.hi, "theta box must be nonempty");
  const Index k = inst.support.rows();
  require(inst.reference.size() == k && inst.slope.size() == k && inst.offset.size() == k,
          "one reference weight, slope and offset per support point");
  const DiscreteDistribution ref{inst.support, inst.reference};
  ref.validate();

  InfSupReport out;
  out.grid_points = grid_points;
  const double h = (inst.hi - inst.lo) / static_cast<double>(grid_points - 1);
  out.bound = inst.slope.cwiseAbs().maxCoeff() * h;

  std::vector<double> grid(grid_points), worst(grid_points);
  for (std::size_t g = 0; g < grid_points; ++g) {
    grid[g] = g + 1 == grid_points ? inst.hi : inst.lo + h * static_cast<double>(g);
    const Vector f = inst.slope * grid[g] + inst.offset;
    worst[g] = worstcase_expectation_primal(inst.support, f, ref, inst.delta, inst.cost).value;
  }
  const auto best = std::min_element(worst.begin(), worst.end());
  out.minmax = *best;
  out.theta_hat = grid[static_cast<std::size_t>(best - worst.begin())];

  // max t s.t. t ≤ E_π ℓ(θ) at both box corners; π in the transport ball.
  const Matrix c = inst.cost.pairwise(inst.support, inst.support);
  std::vector<std::pair<Index, Index>> vars;
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j)
      if (std::isfinite(c(i, j))) vars.emplace_back(i, j);
  const Index nv = static_cast<Index>(vars.size());
  LinearProgram lp;
  lp.objective = Vector::Zero(nv + 2);
  lp.objective[nv] = 1.0;
  lp.objective[nv + 1] = -1.0;
  lp.eq_matrix = Matrix::Zero(k, nv + 2);
  lp.eq_rhs = inst.reference;
  lp.le_matrix = Matrix::Zero(3, nv + 2);
  lp.le_rhs = Vector::Zero(3);
  lp.le_rhs[0] = inst.delta;
  for (Index v = 0; v < nv; ++v) {
    const auto [i, j] = vars[static_cast<std::size_t>(v)];
    lp.eq_matrix(i, v) = 1.0;
    lp.le_matrix(0, v) = c(i, j);
    lp.le_matrix(1, v) = -(inst.slope[j] * inst.lo + inst.offset[j]);
    lp.le_matrix(2, v) = -(inst.slope[j] * inst.hi + inst.offset[j]);
  }
  for (Index row = 1; row <= 2; ++row) {
    lp.le_matrix(row, nv) = 1.0;
    lp.le_matrix(row, nv + 1) = -1.0;
  }
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) fail(ErrorCode::Unsupported, "max-min LP did not solve");
  out.maxmin = sol.value;
  out.gap = std::abs(out.minmax - out.maxmin);
  out.p_hat = Vector::Zero(k);
  for (Index v = 0; v < nv; ++v) out.p_hat[vars[static_cast<std::size_t>(v)].second] += sol.x[v];

  // ε-Nash inequalities on the grid with ε = 2·bound.
  const double eps = 2.0 * out.bound;
  auto risk_hat = [&](double theta) { return out.p_hat.dot(inst.slope * theta + inst.offset); };
  const double at_hat = risk_hat(out.theta_hat);
  out.nash_slack = out.minmax - eps - at_hat;
  for (double g : grid) out.nash_slack = std::max(out.nash_slack, at_hat - risk_hat(g) - eps);
  out.nash_ok = out.nash_slack <= 1e-12;
  return out;
}

InfSupInstance random_infsup_instance(std::uint64_t seed, std::uint64_t index, Index atoms) {
  require(atoms >= 2, "need at least two atoms");
  SplitMix64 engine = make_stream(seed, index);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), weight(0.1, 1.0), radius(0.05, 0.5);
  InfSupInstance inst;
  inst.support.resize(atoms, 1);
  inst.reference.resize(atoms);
  inst.slope.resize(atoms);
  inst.offset.resize(atoms);
  for (Index i = 0; i < atoms; ++i) {
    inst.support(i, 0) = unit(engine);
    inst.reference[i] = weight(engine);
    inst.slope[i] = unit(engine);
    inst.offset[i] = unit(engine);
  }
  inst.reference /= inst.reference.sum();
  inst.delta = radius(engine);
  return inst;
}

double finite_sample_bound(double M, double L, double diam, double r, double dudley, double delta, double eps,
                           double n) {
  require(M > 0.0 && L > 0.0 && diam > 0.0 && dudley > 0.0 && delta > 0.0 && n > 0.0,
          "all constants must be positive");
  require(r >= 1.0, "r must be >= 1");
  require(eps > 0.0 && eps < 1.0, "epsilon must be in (0, 1)");
  const double c0 = 48.0 * dudley;
  const double c1 = 48.0 * L * std::pow(diam, r);
  const double c3 = 3.0 * M / std::sqrt(2.0);
  return (c0 + c1 * std::pow(delta, -1.0 + 1.0 / r) + c3 * std::log(2.0 / eps)) / std::sqrt(n);
}

void generate_fair_data(std::size_t n, Index dim, std::uint64_t seed, std::uint64_t index, Matrix& features,
                        Vector& attribute, Vector& label) {
  SplitMix64 engine = make_stream(seed, index);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const Index rows = static_cast<Index>(n);
  features.resize(rows, dim);
  attribute.resize(rows);
  label.resize(rows);
  for (Index i = 0; i < rows; ++i) {
    attribute[i] = coin(engine) ? 1.0 : 0.0;
    label[i] = coin(engine) ? 1.0 : 0.0;
    const double shift = label[i] == 1.0 ? 0.5 : -0.5;
    for (Index j = 0; j < dim; ++j) features(i, j) = shift + normal(engine);
  }
}

FairnessSimReport simulate_fairness(const FairnessSimConfig& config) {
  require(config.replications >= 1, "replications must be at least 1");
  require(config.n >= 4, "n must be at least 4");
  FairnessSimReport out;
  out.statistics.resize(config.replications);
  std::vector<unsigned char> rejected(config.replications);
  FairnessOptions options;
  options.alpha = config.alpha;
  parallel_for(config.replications, [&](std::size_t r) {
    Matrix x;
    Vector a, y;
    generate_fair_data(config.n, config.theta.size(), config.seed, r, x, a, y);
    const FairnessTestReport rep = fairness_test(x, a, y, config.theta, options);
    out.statistics[r] = rep.statistic;
    rejected[r] = rep.reject;
  });
  for (unsigned char v : rejected) out.rejection_rate += v;
  const double R = static_cast<double>(config.replications);
  out.rejection_rate /= R;
  out.standard_error = std::sqrt(out.rejection_rate * (1.0 - out.rejection_rate) / R);
  return out;
}

}  // namespace wdro

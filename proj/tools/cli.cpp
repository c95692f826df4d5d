#include "cli.hpp"

#include "wdro/dataset.hpp"
#include "wdro/error.hpp"
#include "wdro/estimators.hpp"
#include "wdro/inference.hpp"
#include "wdro/model.hpp"
#include "wdro/norms.hpp"
#include "wdro/ot.hpp"
#include "wdro/profile.hpp"
#include "wdro/radius.hpp"
#include "wdro/rng.hpp"
#include "wdro/simlab.hpp"
#include "wdro/worstcase.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>

namespace wdro::cli {
namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";
constexpr int kReportSchema = 1;

// Bad flag combinations or malformed configs found after CLI11 is done.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
  return out;
}

// Config echo keeps infinities replayable; outputs let them become null.
json echo(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())); }

Vector read_vector(const json& j) {
  std::vector<double> v = j.get<std::vector<double>>();
  return to_vector(v);
}

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config is not valid JSON: " + std::string(e.what()));
  }
}

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config field '") + key + "' has the wrong type");
  }
}

DiscreteDistribution load_distribution(const std::string& path) {
  const Dataset ds = load_dataset(path);
  if (ds.features.cols() < 2) fail(ErrorCode::SchemaViolation, path + ": need atom columns plus a weight column");
  DiscreteDistribution out;
  out.atoms = ds.features.leftCols(ds.features.cols() - 1);
  out.weights = ds.features.col(ds.features.cols() - 1);
  return out;
}

struct CostFlags {
  double q = 2.0;
  double r = 2.0;
  std::vector<double> weights;
  std::optional<double> a;

  void add(CLI::App* app, bool with_r = true) {
    app->add_option("--q", q, "norm exponent of the transport cost")->capture_default_str();
    if (with_r) app->add_option("--r", r, "power of the transport cost")->capture_default_str();
    app->add_option("--weights", weights, "per-coordinate cost weights")->delimiter(',');
    app->add_option("--a", a, "response weight a of the regression cost (inf pins the response)");
  }

  CostSpec spec(bool regression) const {
    CostSpec c;
    c.q = q;
    c.r = r;
    if (!weights.empty()) c.coord_weights = to_vector(weights);
    if (regression) c.regression_weight = a.value_or(kInf);
    return c;
  }

  json config(bool regression) const {
    json j;
    j["q"] = echo(q);
    j["r"] = echo(r);
    j["weights"] = weights;
    if (regression) j["a"] = echo(a.value_or(kInf));
    return j;
  }
};

struct DataFlags {
  std::string path;
  std::optional<std::string> response;

  void add(CLI::App* app) {
    app->add_option("--data", path, "CSV file with a header row")->required();
    app->add_option("--response", response, "response column (regression; default: last column)");
  }

  // Regression rows end with the response; without --response the last
  // column already plays that role.
  Matrix samples() const {
    DatasetSchema schema;
    schema.response = response;
    return load_dataset(path, schema).samples();
  }

  json config() const {
    json j;
    j["data"] = path;
    j["response"] = response ? json(*response) : json(nullptr);
    return j;
  }
};

Index param_dim(const std::string& model, const Matrix& samples) {
  return model == "regression" ? samples.cols() - 1 : samples.cols();
}

std::unique_ptr<EstimatingModel> model_for(const std::string& name, const Matrix& samples) {
  const Index d = param_dim(name, samples);
  if (d < 1) fail(ErrorCode::SchemaViolation, "data has too few columns for the " + name + " model");
  return make_model(name, d);
}

void check_theta(const Vector& theta, Index d) {
  if (theta.size() != d)
    fail(ErrorCode::InvalidArgument, "theta has " + std::to_string(theta.size()) + " entries, expected " +
                                         std::to_string(d));
}

json radius_json(const RadiusEstimate& r) {
  json j;
  j["delta"] = r.delta;
  j["eta"] = r.quantile.eta;
  j["alpha"] = r.quantile.alpha;
  j["k"] = r.quantile.k;
  j["seed"] = r.quantile.seed;
  j["quantileIndex"] = r.quantile.quantile_index;
  j["thetaErm"] = to_json(r.theta_erm);
  j["ridgeApplied"] = r.ridge_applied;
  j["singularA"] = r.singular_a;
  return j;
}

json fit_json(const FitResult& f) {
  json j;
  j["theta"] = to_json(f.theta);
  j["objective"] = f.objective;
  j["delta"] = f.delta;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  j["stationarity"] = f.stationarity;
  j["warnings"] = f.warnings;
  return j;
}

RadiusRule read_radius_rule(const json& cfg) {
  RadiusRule rule;
  if (!cfg.contains("radiusRule")) return rule;
  const json& r = cfg.at("radiusRule");
  const std::string kind = field<std::string>(r, "kind", "algorithm1");
  if (kind == "fixed") rule.kind = RadiusRuleKind::Fixed;
  else if (kind == "power") rule.kind = RadiusRuleKind::Power;
  else if (kind == "algorithm1") rule.kind = RadiusRuleKind::Algorithm1;
  else throw UsageError("radiusRule.kind must be fixed, power or algorithm1");
  rule.delta = field(r, "delta", rule.delta);
  rule.c = field(r, "c", rule.c);
  rule.gamma = field(r, "gamma", rule.gamma);
  rule.alpha = field(r, "alpha", rule.alpha);
  rule.k = field(r, "k", rule.k);
  return rule;
}

json radius_rule_json(const RadiusRule& rule) {
  json j;
  switch (rule.kind) {
    case RadiusRuleKind::Fixed: j["kind"] = "fixed"; j["delta"] = rule.delta; break;
    case RadiusRuleKind::Power: j["kind"] = "power"; j["c"] = rule.c; j["gamma"] = rule.gamma; break;
    case RadiusRuleKind::Algorithm1:
      j["kind"] = "algorithm1";
      j["alpha"] = rule.alpha;
      j["k"] = rule.k == 0 ? default_draws(rule.alpha) : rule.k;
      break;
  }
  return j;
}

SimConfig read_sim_config(const json& cfg, RadiusRule default_rule) {
  SimConfig sc;
  if (cfg.contains("modelSpec")) {
    const json& m = cfg.at("modelSpec");
    if (m.contains("thetaStar")) sc.model.theta_star = read_vector(m.at("thetaStar"));
    sc.model.rho = field(m, "rho", sc.model.rho);
    sc.model.sigma2 = field(m, "sigma2", sc.model.sigma2);
  }
  sc.n = field<std::size_t>(cfg, "n", sc.n);
  sc.replications = field<std::size_t>(cfg, "reps", sc.replications);
  sc.seed = field<std::uint64_t>(cfg, "seed", sc.seed);
  sc.p = field(cfg, "p", sc.p);
  sc.radius = cfg.contains("radiusRule") ? read_radius_rule(cfg) : default_rule;
  return sc;
}

json sim_config_json(const SimConfig& sc) {
  json j;
  j["modelSpec"] = {{"thetaStar", to_json(sc.model.theta_star)}, {"rho", sc.model.rho}, {"sigma2", sc.model.sigma2}};
  j["n"] = sc.n;
  j["reps"] = sc.replications;
  j["radiusRule"] = radius_rule_json(sc.radius);
  j["seed"] = sc.seed;
  j["p"] = sc.p;
  return j;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path);
  out.precision(17);
  return out;
}

struct Report {
  explicit Report(std::string name) : command(std::move(name)) {}

  std::string command;
  json config = json::object();
  std::optional<std::uint64_t> seed;
  json outputs = json::object();
};

using Handler = std::function<Report()>;

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wasserstein distributionally robust estimation and inference", "wdro"};
  app.require_subcommand(1);
  bool timing = false;
  app.add_flag("--timing", timing, "add wall-clock time to the report (breaks byte-identical output)");
  app.set_version_flag("--version", kVersion);

  std::vector<std::pair<CLI::App*, Handler>> handlers;

  // ot -------------------------------------------------------------------
  struct {
    std::string source, target;
    CostFlags cost;
  } ot;
  CLI::App* ot_cmd = app.add_subcommand("ot", "optimal transport cost between two discrete distributions");
  ot_cmd->add_option("--source", ot.source, "CSV: one atom per row, last column = weight")->required();
  ot_cmd->add_option("--target", ot.target, "CSV: one atom per row, last column = weight")->required();
  ot.cost.add(ot_cmd);
  handlers.emplace_back(ot_cmd, [&] {
    Report rep("ot");
    const DiscreteDistribution p = load_distribution(ot.source);
    const DiscreteDistribution q = load_distribution(ot.target);
    const TransportResult res = transport_cost(p, q, ot.cost.spec(false));
    rep.config = ot.cost.config(false);
    rep.config["source"] = ot.source;
    rep.config["target"] = ot.target;
    rep.outputs["value"] = res.value;
    rep.outputs["plan"] = to_json(res.coupling.plan);
    rep.outputs["rowMarginal"] = to_json(res.coupling.row_marginal);
    rep.outputs["colMarginal"] = to_json(res.coupling.col_marginal);
    return rep;
  });

  // risk -----------------------------------------------------------------
  struct {
    DataFlags data;
    std::vector<double> theta;
    double delta = 0.0;
    std::string loss = "regression";
    CostFlags cost;
  } risk;
  CLI::App* risk_cmd = app.add_subcommand("risk", "worst-case risk over a Wasserstein ball around the data");
  risk.data.add(risk_cmd);
  risk_cmd->add_option("--theta", risk.theta, "parameter, comma separated")->required()->delimiter(',');
  risk_cmd->add_option("--delta", risk.delta, "radius of the ambiguity set")->required()->check(CLI::NonNegativeNumber);
  risk_cmd->add_option("--loss", risk.loss, "loss family")
      ->check(CLI::IsMember({"portfolio", "variance", "regression", "mean"}))
      ->capture_default_str();
  risk.cost.add(risk_cmd);
  handlers.emplace_back(risk_cmd, [&] {
    Report rep("risk");
    const bool regression = risk.loss == "regression";
    const Matrix samples = risk.data.samples();
    const Vector theta = to_vector(risk.theta);
    const CostSpec cost = risk.cost.spec(regression);
    const double p = conjugate_exponent(cost.q);
    const bool plain = cost.r == 2.0 && risk.cost.weights.empty();
    rep.config = risk.data.config();
    rep.config.update(risk.cost.config(regression));
    rep.config["theta"] = risk.theta;
    rep.config["delta"] = risk.delta;
    rep.config["loss"] = risk.loss;

    RobustRisk rr;
    std::optional<double> closed;
    if (risk.loss == "variance") {
      check_theta(theta, samples.cols());
      rr = robust_variance_dual(samples, theta, risk.delta, cost);
      if (plain) {
        const Vector proj = samples * theta;
        const double s = std::sqrt((proj.array() - proj.mean()).square().mean());
        closed = wc_variance(theta, s, risk.delta, p);
      }
    } else {
      const auto model = model_for(risk.loss, samples);
      check_theta(theta, model->param_dim());
      rr = robust_risk_dual(*model, samples, theta, risk.delta, cost);
      if (plain && risk.loss == "portfolio") {
        closed = wc_portfolio_return(theta, samples.colwise().mean().transpose(), risk.delta, p);
      } else if (plain && regression) {
        closed = wc_regression_risk(theta, samples, risk.delta, p, *cost.regression_weight);
      }
    }
    rep.outputs["value"] = rr.value;
    rep.outputs["lambdaStar"] = rr.lambda_star;
    rep.outputs["closedForm"] = closed ? json(*closed) : json(nullptr);
    return rep;
  });

  // fit ------------------------------------------------------------------
  struct {
    DataFlags data;
    std::optional<double> delta, alpha, target_return;
    std::string loss = "regression";
    double p = 2.0;
    std::size_t k = 0;
    std::uint64_t seed = 1;
  } fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "distributionally robust estimator");
  fit.data.add(fit_cmd);
  CLI::Option* fit_delta = fit_cmd->add_option("--delta", fit.delta, "radius")->check(CLI::NonNegativeNumber);
  CLI::Option* fit_alpha =
      fit_cmd->add_option("--alpha", fit.alpha, "pick the radius from the limit law at level 1 - alpha")
          ->check(CLI::Range(0.0, 1.0));
  fit_delta->excludes(fit_alpha);
  fit_cmd->add_option("--loss", fit.loss, "estimator")->check(CLI::IsMember({"regression", "portfolio"}))->capture_default_str();
  fit_cmd->add_option("--p", fit.p, "penalty norm")->capture_default_str();
  fit_cmd->add_option("--target-return", fit.target_return, "portfolio: required robust return");
  fit_cmd->add_option("--k", fit.k, "limit-law draws for --alpha (0: default)")->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "seed for --alpha")->capture_default_str();
  handlers.emplace_back(fit_cmd, [&] {
    Report rep("fit");
    if (!fit.delta && !fit.alpha) throw UsageError("fit needs --delta or --alpha");
    const Matrix samples = fit.data.samples();
    rep.config = fit.data.config();
    rep.config["loss"] = fit.loss;
    rep.config["p"] = echo(fit.p);
    double delta = fit.delta.value_or(0.0);
    if (fit.alpha) {
      if (fit.loss != "regression") fail(ErrorCode::Unsupported, "--alpha is only wired for the regression estimator");
      CostSpec cost;
      cost.q = conjugate_exponent(fit.p);
      cost.regression_weight = kInf;
      const RegressionModel model(samples.cols() - 1);
      const std::size_t k = fit.k == 0 ? default_draws(*fit.alpha) : fit.k;
      const RadiusEstimate r = estimate_radius(model, samples, *fit.alpha, k, fit.seed, cost);
      delta = r.delta;
      rep.seed = fit.seed;
      rep.config["alpha"] = *fit.alpha;
      rep.config["k"] = k;
      rep.config["seed"] = fit.seed;
      rep.outputs["radius"] = radius_json(r);
    }
    rep.config["delta"] = delta;
    FitResult res;
    if (fit.loss == "regression") {
      res = fit_sqrt_lasso(samples, delta, fit.p);
    } else {
      if (!fit.target_return) throw UsageError("portfolio fit needs --target-return");
      rep.config["targetReturn"] = *fit.target_return;
      res = fit_dr_mean_variance(samples, delta, *fit.target_return, fit.p);
    }
    rep.outputs["fit"] = fit_json(res);
    return rep;
  });

  // profile --------------------------------------------------------------
  struct {
    DataFlags data;
    std::vector<double> theta;
    std::string model = "mean";
    CostFlags cost;
  } prof;
  CLI::App* prof_cmd = app.add_subcommand("profile", "Wasserstein profile function at theta");
  prof.data.add(prof_cmd);
  prof_cmd->add_option("--theta", prof.theta, "parameter, comma separated")->required()->delimiter(',');
  prof_cmd->add_option("--model", prof.model, "estimating equation")->check(CLI::IsMember({"mean", "regression"}))->capture_default_str();
  prof.cost.add(prof_cmd, false);
  handlers.emplace_back(prof_cmd, [&] {
    Report rep("profile");
    const bool regression = prof.model == "regression";
    const Matrix samples = prof.data.samples();
    const auto model = model_for(prof.model, samples);
    const Vector theta = to_vector(prof.theta);
    check_theta(theta, model->param_dim());
    const ProfileValue pv = profile_value(*model, samples, theta, prof.cost.spec(regression));
    rep.config = prof.data.config();
    rep.config.update(prof.cost.config(regression));
    rep.config["theta"] = prof.theta;
    rep.config["model"] = prof.model;
    rep.outputs["value"] = pv.value;
    rep.outputs["lambdaStar"] = to_json(pv.lambda_star);
    rep.outputs["scaled"] = pv.scaled;
    rep.outputs["converged"] = pv.converged;
    return rep;
  });

  // radius ---------------------------------------------------------------
  struct {
    std::string data;
    std::optional<std::string> response;
    double alpha = 0.1;
    std::size_t k = 0;
    std::uint64_t seed = 1;
    std::string model = "regression";
    CostFlags cost;
    bool highdim = false;
    std::optional<double> n, d;
  } rad;
  CLI::App* rad_cmd = app.add_subcommand("radius", "optimal radius from the limit law, or the high-dimensional rule");
  rad_cmd->add_option("--data", rad.data, "CSV file with a header row");
  rad_cmd->add_option("--response", rad.response, "response column (regression; default: last column)");
  rad_cmd->add_option("--alpha", rad.alpha, "miscoverage level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  rad_cmd->add_option("--k", rad.k, "limit-law draws (0: default)")->capture_default_str();
  rad_cmd->add_option("--seed", rad.seed, "seed")->capture_default_str();
  rad_cmd->add_option("--model", rad.model, "estimating equation")->check(CLI::IsMember({"regression", "mean"}))->capture_default_str();
  rad.cost.add(rad_cmd, false);
  rad_cmd->add_flag("--highdim", rad.highdim, "square-root lasso rule sqrt(delta) = pi/(pi-2) Phi^-1(1 - alpha/2d) / sqrt(n)");
  rad_cmd->add_option("--n", rad.n, "sample size (--highdim)");
  rad_cmd->add_option("--d", rad.d, "dimension (--highdim)");
  handlers.emplace_back(rad_cmd, [&] {
    Report rep("radius");
    if (rad.highdim) {
      if (!rad.n || !rad.d) throw UsageError("--highdim needs --n and --d");
      if (!rad.data.empty()) throw UsageError("--highdim takes no --data");
      const HighDimRadius h = sqrt_lasso_radius(*rad.n, *rad.d, rad.alpha);
      rep.config = {{"highdim", true}, {"n", *rad.n}, {"d", *rad.d}, {"alpha", rad.alpha}};
      rep.outputs["sqrtDelta"] = h.sqrt_delta;
      rep.outputs["delta"] = h.delta;
      rep.outputs["alphaOutOfRange"] = h.alpha_out_of_range;
      return rep;
    }
    if (rad.data.empty()) throw UsageError("radius needs --data (or --highdim)");
    DataFlags df{rad.data, rad.response};
    const bool regression = rad.model == "regression";
    const Matrix samples = df.samples();
    const auto model = model_for(rad.model, samples);
    const std::size_t k = rad.k == 0 ? default_draws(rad.alpha) : rad.k;
    const RadiusEstimate r = estimate_radius(*model, samples, rad.alpha, k, rad.seed, rad.cost.spec(regression));
    rep.seed = rad.seed;
    rep.config = df.config();
    rep.config.update(rad.cost.config(regression));
    rep.config["model"] = rad.model;
    rep.config["alpha"] = rad.alpha;
    rep.config["k"] = k;
    rep.config["seed"] = rad.seed;
    rep.outputs = radius_json(r);
    return rep;
  });

  // region ---------------------------------------------------------------
  struct {
    DataFlags data;
    double alpha = 0.1;
    std::size_t k = 2000, draws = 0;
    std::uint64_t seed = 1;
    std::string model = "regression";
    CostFlags cost;
  } reg;
  CLI::App* reg_cmd = app.add_subcommand("region", "confidence region compatible with the ambiguity set");
  reg.data.add(reg_cmd);
  reg_cmd->add_option("--alpha", reg.alpha, "miscoverage level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  reg_cmd->add_option("--k", reg.k, "number of halfspace directions")->check(CLI::PositiveNumber)->capture_default_str();
  reg_cmd->add_option("--draws", reg.draws, "limit-law draws for the radius (0: default)")->capture_default_str();
  reg_cmd->add_option("--seed", reg.seed, "seed")->capture_default_str();
  reg_cmd->add_option("--model", reg.model, "estimating equation")->check(CLI::IsMember({"regression", "mean"}))->capture_default_str();
  reg.cost.add(reg_cmd, false);
  handlers.emplace_back(reg_cmd, [&] {
    Report rep("region");
    const bool regression = reg.model == "regression";
    const Matrix samples = reg.data.samples();
    const auto model = model_for(reg.model, samples);
    RegionOptions opts;
    opts.alpha = reg.alpha;
    opts.directions = reg.k;
    opts.draws = reg.draws == 0 ? default_draws(reg.alpha) : reg.draws;
    opts.seed = reg.seed;
    const RegionResult res = build_region(*model, samples, reg.cost.spec(regression), opts);
    rep.seed = reg.seed;
    rep.config = reg.data.config();
    rep.config.update(reg.cost.config(regression));
    rep.config["model"] = reg.model;
    rep.config["alpha"] = reg.alpha;
    rep.config["k"] = reg.k;
    rep.config["draws"] = opts.draws;
    rep.config["seed"] = reg.seed;
    rep.outputs["radius"] = radius_json(res.radius);
    rep.outputs["halfspaces"] = {{"center", to_json(res.halfspaces.center)},
                                 {"scale", res.halfspaces.scale},
                                 {"directions", to_json(res.halfspaces.directions)},
                                 {"bounds", to_json(res.halfspaces.bounds)}};
    if (res.ellipsoid) {
      rep.outputs["ellipsoid"] = {{"center", to_json(res.ellipsoid->center)},
                                  {"shapeMatrix", to_json(res.ellipsoid->shape)},
                                  {"level", res.ellipsoid->level},
                                  {"n", res.ellipsoid->n}};
    } else {
      rep.outputs["ellipsoid"] = nullptr;
    }
    return rep;
  });

  // test-fairness --------------------------------------------------------
  struct {
    std::string data, attribute = "A", label = "Y";
    std::vector<double> theta;
    double alpha = 0.05;
    std::size_t grid = 512;
  } fair;
  CLI::App* fair_cmd = app.add_subcommand("test-fairness", "equal-opportunity test for a logistic classifier");
  fair_cmd->add_option("--data", fair.data, "CSV with features, attribute and label columns")->required();
  fair_cmd->add_option("--theta", fair.theta, "classifier weights, comma separated")->required()->delimiter(',');
  fair_cmd->add_option("--alpha", fair.alpha, "test level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  fair_cmd->add_option("--attribute", fair.attribute, "0/1 sensitive attribute column")->capture_default_str();
  fair_cmd->add_option("--label", fair.label, "0/1 label column")->capture_default_str();
  fair_cmd->add_option("--inner-grid", fair.grid, "grid size of the inner maximization")->check(CLI::PositiveNumber)->capture_default_str();
  handlers.emplace_back(fair_cmd, [&] {
    Report rep("test-fairness");
    DatasetSchema schema;
    schema.attribute = fair.attribute;
    schema.label = fair.label;
    const Dataset ds = load_dataset(fair.data, schema);
    const Vector theta = to_vector(fair.theta);
    check_theta(theta, ds.features.cols());
    FairnessOptions opts;
    opts.alpha = fair.alpha;
    opts.inner_grid = fair.grid;
    const FairnessTestReport r = fairness_test(ds.features, *ds.attribute, *ds.label, theta, opts);
    rep.config = {{"data", fair.data}, {"attribute", fair.attribute}, {"label", fair.label},
                  {"theta", fair.theta}, {"alpha", fair.alpha}, {"innerGrid", fair.grid}};
    rep.outputs = {{"statistic", r.statistic}, {"profile", r.profile},     {"lambdaStar", r.lambda_star},
                   {"betaHat", r.beta_hat},    {"sigmaZSq", r.sigma_z_sq}, {"chi2Quantile", r.chi2_quantile},
                   {"threshold", r.threshold}, {"reject", r.reject},       {"p11", r.p11},
                   {"p01", r.p01},             {"n11", r.n11},             {"n01", r.n01},
                   {"meanGap", r.mean_gap}};
    return rep;
  });

  // simulate -------------------------------------------------------------
  struct {
    std::string config, csv;
  } sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo experiments (config: JSON file)");
  sim_cmd->require_subcommand(1);
  auto sim_sub = [&](const char* name, const char* help) {
    CLI::App* s = sim_cmd->add_subcommand(name, help);
    s->add_option("--config", sim.config, "JSON config; absent fields take their defaults");
    s->add_option("--csv", sim.csv, "also write per-replication values to this CSV file");
    return s;
  };

  CLI::App* scatter_cmd = sim_sub("scatter", "ERM vs DRO estimates across replications");
  handlers.emplace_back(scatter_cmd, [&] {
    Report rep("simulate scatter");
    const SimConfig sc = read_sim_config(read_config(sim.config), RadiusRule{});
    const ScatterReport r = simulate_scatter(sc);
    rep.seed = sc.seed;
    rep.config = sim_config_json(sc);
    rep.outputs = {{"varianceErm", to_json(r.var_erm)},
                   {"varianceDro", to_json(r.var_dro)},
                   {"varianceRatio", to_json(r.variance_ratio)},
                   {"meanNormErm", r.mean_norm_erm},
                   {"meanNormDro", r.mean_norm_dro}};
    if (!sim.csv.empty()) {
      std::ofstream csv = open_csv(sim.csv);
      const Index d = sc.model.theta_star.size();
      csv << "rep,delta";
      for (Index j = 0; j < d; ++j) csv << ",erm" << j + 1;
      for (Index j = 0; j < d; ++j) csv << ",dro" << j + 1;
      csv << '\n';
      for (std::size_t i = 0; i < r.erm.size(); ++i) {
        csv << i << ',' << r.delta[i];
        for (Index j = 0; j < d; ++j) csv << ',' << r.erm[i][j];
        for (Index j = 0; j < d; ++j) csv << ',' << r.dro[i][j];
        csv << '\n';
      }
    }
    return rep;
  });

  CLI::App* clt_cmd = sim_sub("clt", "limit behavior of sqrt(n)(dro - erm) under delta = c n^-gamma");
  handlers.emplace_back(clt_cmd, [&] {
    Report rep("simulate clt");
    const json cfg = read_config(sim.config);
    RadiusRule rule;
    rule.kind = RadiusRuleKind::Power;
    const SimConfig sc = read_sim_config(cfg, rule);
    const auto sizes = field<std::vector<std::size_t>>(cfg, "sizes", {sc.n});
    const CltReport r = simulate_clt(sc, sizes);
    rep.seed = sc.seed;
    rep.config = sim_config_json(sc);
    rep.config["sizes"] = sizes;
    json rows = json::array();
    for (const CltRow& row : r.rows) {
      rows.push_back({{"n", row.n},
                      {"delta", row.delta},
                      {"meanScaledGap", to_json(row.mean_scaled_gap)},
                      {"seScaledGap", to_json(row.se_scaled_gap)},
                      {"meanScaledGapNorm", row.mean_scaled_gap_norm},
                      {"meanErrorNorm", row.mean_error_norm}});
    }
    rep.outputs = {{"c", r.c},
                   {"gamma", r.gamma},
                   {"biasTerm", to_json(r.bias.b)},
                   {"rows", rows},
                   {"logLogSlope", r.rows.size() >= 2 ? json(r.log_log_slope) : json(nullptr)}};
    if (!sim.csv.empty()) {
      std::ofstream csv = open_csv(sim.csv);
      const Index d = sc.model.theta_star.size();
      csv << "n,delta";
      for (Index j = 0; j < d; ++j) csv << ",mean_gap" << j + 1 << ",se_gap" << j + 1;
      csv << ",mean_gap_norm,mean_error_norm\n";
      for (const CltRow& row : r.rows) {
        csv << row.n << ',' << row.delta;
        for (Index j = 0; j < d; ++j) csv << ',' << row.mean_scaled_gap[j] << ',' << row.se_scaled_gap[j];
        csv << ',' << row.mean_scaled_gap_norm << ',' << row.mean_error_norm << '\n';
      }
    }
    return rep;
  });

  CLI::App* cov_cmd = sim_sub("coverage", "coverage of the compatible confidence region");
  handlers.emplace_back(cov_cmd, [&] {
    Report rep("simulate coverage");
    const json cfg = read_config(sim.config);
    RadiusRule rule;
    rule.alpha = field(cfg, "alpha", 0.1);
    const SimConfig sc = read_sim_config(cfg, rule);
    const double alpha = field(cfg, "alpha", 0.1);
    const auto directions = field<std::size_t>(cfg, "directions", 2000);
    const CoverageReport r = simulate_coverage(sc, alpha, directions);
    rep.seed = sc.seed;
    rep.config = sim_config_json(sc);
    rep.config["alpha"] = alpha;
    rep.config["directions"] = directions;
    rep.outputs = {{"coverage", r.coverage_theta_star},
                   {"standardError", r.standard_error},
                   {"coverageErm", r.coverage_erm},
                   {"coverageDro", r.coverage_dro},
                   {"containmentFailures", r.containment_failures}};
    if (!sim.csv.empty()) {
      std::ofstream csv = open_csv(sim.csv);
      csv << "rep,eta,covered\n";
      for (std::size_t i = 0; i < r.eta.size(); ++i) csv << i << ',' << r.eta[i] << ',' << int(r.covered[i]) << '\n';
    }
    return rep;
  });

  CLI::App* infsup_cmd = sim_sub("infsup", "min-max vs max-min on random finite instances");
  handlers.emplace_back(infsup_cmd, [&] {
    Report rep("simulate infsup");
    const json cfg = read_config(sim.config);
    const auto count = field<std::size_t>(cfg, "instances", 20);
    const auto atoms = field<Index>(cfg, "atoms", 3);
    const auto grid = field<std::size_t>(cfg, "gridPoints", 41);
    const auto seed = field<std::uint64_t>(cfg, "seed", 1);
    if (grid < 2) throw UsageError("gridPoints must be at least 2");
    rep.seed = seed;
    rep.config = {{"instances", count}, {"atoms", atoms}, {"gridPoints", grid}, {"seed", seed}};
    json rows = json::array();
    std::size_t within = 0, halved = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const InfSupInstance inst = random_infsup_instance(seed, i, atoms);
      const InfSupReport coarse = infsup_gap(inst, grid);
      const InfSupReport fine = infsup_gap(inst, 2 * grid - 1);
      within += coarse.gap <= 2.0 * coarse.bound && fine.gap <= 2.0 * fine.bound;
      halved += fine.bound <= 0.5 * coarse.bound * (1.0 + 1e-12);
      rows.push_back({{"minmax", coarse.minmax},
                      {"maxmin", coarse.maxmin},
                      {"gap", coarse.gap},
                      {"bound", coarse.bound},
                      {"refinedGap", fine.gap},
                      {"refinedBound", fine.bound},
                      {"thetaHat", coarse.theta_hat},
                      {"nashSlack", coarse.nash_slack},
                      {"nashOk", coarse.nash_ok}});
    }
    rep.outputs = {{"instances", rows}, {"withinTwiceBound", within}, {"boundHalved", halved}};
    if (!sim.csv.empty()) {
      std::ofstream csv = open_csv(sim.csv);
      csv << "instance,minmax,maxmin,gap,bound,refined_gap,refined_bound\n";
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const json& r = rows[i];
        csv << i << ',' << r["minmax"].get<double>() << ',' << r["maxmin"].get<double>() << ','
            << r["gap"].get<double>() << ',' << r["bound"].get<double>() << ',' << r["refinedGap"].get<double>()
            << ',' << r["refinedBound"].get<double>() << '\n';
      }
    }
    return rep;
  });

  CLI::App* fsim_cmd = sim_sub("fairness", "size of the equal-opportunity test under a fair generator");
  handlers.emplace_back(fsim_cmd, [&] {
    Report rep("simulate fairness");
    const json cfg = read_config(sim.config);
    FairnessSimConfig fc;
    fc.n = field<std::size_t>(cfg, "n", fc.n);
    fc.replications = field<std::size_t>(cfg, "reps", fc.replications);
    fc.alpha = field(cfg, "alpha", fc.alpha);
    fc.seed = field<std::uint64_t>(cfg, "seed", fc.seed);
    if (cfg.contains("theta")) fc.theta = read_vector(cfg.at("theta"));
    const FairnessSimReport r = simulate_fairness(fc);
    rep.seed = fc.seed;
    rep.config = {{"n", fc.n}, {"reps", fc.replications}, {"alpha", fc.alpha}, {"seed", fc.seed},
                  {"theta", to_json(fc.theta)}};
    rep.outputs = {{"rejectionRate", r.rejection_rate}, {"standardError", r.standard_error}};
    if (!sim.csv.empty()) {
      std::ofstream csv = open_csv(sim.csv);
      csv << "rep,statistic\n";
      for (std::size_t i = 0; i < r.statistics.size(); ++i) csv << i << ',' << r.statistics[i] << '\n';
    }
    return rep;
  });

  // bound ----------------------------------------------------------------
  struct {
    double M = 0, L = 0, diam = 0, r = 2, dudley = 0, delta = 0, eps = 0.05, n = 0;
  } bnd;
  CLI::App* bound_cmd = app.add_subcommand("bound", "finite-sample excess-risk bound for a fixed radius");
  bound_cmd->add_option("--M", bnd.M, "bound on the loss")->required();
  bound_cmd->add_option("--L", bnd.L, "Lipschitz constant of the loss in x")->required();
  bound_cmd->add_option("--diam", bnd.diam, "diameter of the sample space")->required();
  bound_cmd->add_option("--r", bnd.r, "cost power")->capture_default_str();
  bound_cmd->add_option("--dudley", bnd.dudley, "Dudley entropy integral of the loss class")->required();
  bound_cmd->add_option("--delta", bnd.delta, "radius")->required();
  bound_cmd->add_option("--eps", bnd.eps, "failure probability")->capture_default_str();
  bound_cmd->add_option("--n", bnd.n, "sample size")->required();
  handlers.emplace_back(bound_cmd, [&] {
    Report rep("bound");
    const double value = finite_sample_bound(bnd.M, bnd.L, bnd.diam, bnd.r, bnd.dudley, bnd.delta, bnd.eps, bnd.n);
    rep.config = {{"M", bnd.M}, {"L", bnd.L}, {"diam", bnd.diam}, {"r", bnd.r}, {"dudley", bnd.dudley},
                  {"delta", bnd.delta}, {"eps", bnd.eps}, {"n", bnd.n}};
    rep.outputs = {{"bound", value},
                   {"c0", 48.0 * bnd.dudley},
                   {"c1", 48.0 * bnd.L * std::pow(bnd.diam, bnd.r)},
                   {"c3", 3.0 * bnd.M / std::sqrt(2.0)}};
    return rep;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "wdro: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const Handler* handler = nullptr;
  CLI::App* chosen = nullptr;
  for (const auto& [cmd, h] : handlers) {
    if (cmd->parsed()) {
      handler = &h;
      chosen = cmd;
    }
  }
  if (handler == nullptr) {
    err << "wdro: no command given\n\n" << app.help();
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  json report;
  report["version"] = kVersion;
  report["schema"] = kReportSchema;
  try {
    Report rep = (*handler)();
    report["command"] = rep.command;
    report["config"] = rep.config;
    report["seed"] = rep.seed ? json(*rep.seed) : json(nullptr);
    report["rng"] = std::string(kRngFamily);
    report["outputs"] = rep.outputs;
  } catch (const UsageError& e) {
    err << "wdro: " << e.what() << "\n\n" << chosen->help();
    return 2;
  } catch (const Error& e) {
    report["command"] = chosen->get_name();
    report["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
    out << report.dump(2) << '\n';
    err << "wdro: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    report["command"] = chosen->get_name();
    report["error"] = {{"code", "InternalError"}, {"message", e.what()}};
    out << report.dump(2) << '\n';
    err << "wdro: " << e.what() << '\n';
    return 1;
  }
  if (timing) {
    report["wallTimeSeconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  out << report.dump(2) << '\n';
  return 0;
}

}  // namespace wdro::cli

#include "wdro/inference.hpp"

#include "wdro/error.hpp"
#include "wdro/norms.hpp"
#include "wdro/parallel.hpp"
#include "wdro/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace wdro {
namespace {

constexpr std::uint64_t kDirectionStream = 0x6469726563ULL;  // keeps directions apart from limit-law draws

Matrix mean_jac_theta(const EstimatingModel& model, const Matrix& samples, const Vector& theta) {
  const Index d = model.param_dim();
  Matrix C = Matrix::Zero(d, d);
  for (Index i = 0; i < samples.rows(); ++i) C += model.jac_theta_h(samples.row(i).transpose(), theta);
  return C / static_cast<double>(samples.rows());
}

RegionResult assemble(const EstimatingModel& model, const Matrix& samples, const CostSpec& cost, double eta,
                      const Vector& center, std::size_t directions, std::uint64_t seed) {
  const Index d = model.param_dim();
  const double n = static_cast<double>(samples.rows());
  RegionResult out;
  out.c_hat = mean_jac_theta(model, samples, center);
  Eigen::JacobiSVD<Matrix> svd(out.c_hat);
  const Vector sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[d - 1] <= 1e-12 * sv[0]) fail(ErrorCode::SingularHessian, "C-hat is singular");
  const Matrix c_inv = out.c_hat.inverse();

  const LimitLaw law = build_limit_law(model, samples, center, cost);
  out.halfspaces.center = center;
  out.halfspaces.scale = 1.0 / std::sqrt(n);
  out.halfspaces.directions = sphere_directions(d, directions, stream_seed(seed, kDirectionStream));
  out.halfspaces.bounds.resize(static_cast<Index>(directions));
  const bool quadratic = law.mode == ConjugateMode::ClosedForm;
  parallel_for(directions, [&](std::size_t i) {
    const Vector xi = c_inv * out.halfspaces.directions.row(static_cast<Index>(i)).transpose();
    const double phi = quadratic ? 0.25 * xi.dot(law.A * xi) : phi_hat(xi, law);
    out.halfspaces.bounds[static_cast<Index>(i)] = 2.0 * std::sqrt(std::max(0.0, eta * phi));
  });

  if (quadratic && !law.singular_a) {
    EllipsoidRegion e;
    e.center = center;
    e.shape = c_inv.transpose() * law.A * c_inv;
    e.shape = 0.5 * (e.shape + e.shape.transpose());
    e.level = eta;
    e.n = n;
    out.ellipsoid = std::move(e);
  }
  return out;
}

}  // namespace

Matrix sphere_directions(Index dim, std::size_t count, std::uint64_t seed) {
  Matrix out(static_cast<Index>(count), dim);
  for (std::size_t i = 0; i < count; ++i) {
    SplitMix64 engine = make_stream(seed, i);
    Vector z = standard_normal_vector(engine, dim);
    while (z.norm() == 0.0) z = standard_normal_vector(engine, dim);
    out.row(static_cast<Index>(i)) = (z / z.norm()).transpose();
  }
  return out;
}

RegionResult build_region(const EstimatingModel& model, const Matrix& samples, const CostSpec& cost,
                          const RegionOptions& options) {
  require(options.directions >= 1, "need at least one direction");
  const std::size_t draws = options.draws == 0 ? default_draws(options.alpha) : options.draws;
  const RadiusEstimate radius = estimate_radius(model, samples, options.alpha, draws, options.seed, cost);
  RegionResult out =
      assemble(model, samples, cost, radius.quantile.eta, radius.theta_erm, options.directions, options.seed);
  out.radius = radius;
  return out;
}

RegionResult build_region_with_level(const EstimatingModel& model, const Matrix& samples, const CostSpec& cost,
                                     double eta, std::size_t directions, std::uint64_t seed) {
  require(eta >= 0.0, "level must be nonnegative");
  require(directions >= 1, "need at least one direction");
  const Vector center = model.fit_erm(samples);
  RegionResult out = assemble(model, samples, cost, eta, center, directions, seed);
  out.radius.theta_erm = center;
  out.radius.quantile.eta = eta;
  out.radius.delta = eta / static_cast<double>(samples.rows());
  return out;
}

bool region_contains(const HalfspaceRegion& region, const Vector& theta) {
  const Vector v = (theta - region.center) / region.scale;
  const Vector proj = region.directions * v;
  for (Index i = 0; i < proj.size(); ++i)
    if (proj[i] > region.bounds[i]) return false;
  return true;
}

bool region_contains(const EllipsoidRegion& region, const Vector& theta) {
  const Vector diff = theta - region.center;
  if (diff.isZero(0.0)) return true;
  const double q = diff.dot(region.shape.ldlt().solve(diff));
  return region.n * q <= region.level;
}

double ellipsoid_halfspace_ratio(const HalfspaceRegion& halfspaces, const EllipsoidRegion& ellipsoid) {
  double worst = 0.0;
  for (Index i = 0; i < halfspaces.directions.rows(); ++i) {
    const Vector u = halfspaces.directions.row(i).transpose();
    const double support = std::sqrt(std::max(0.0, ellipsoid.level * u.dot(ellipsoid.shape * u)));
    const double b = halfspaces.bounds[i];
    if (b == 0.0) {
      if (support > 0.0) return kInf;
      continue;
    }
    worst = std::max(worst, support / b);
  }
  return worst;
}

double region_ray_gap(const HalfspaceRegion& halfspaces, const EllipsoidRegion& ellipsoid, std::size_t rays,
                      std::uint64_t seed) {
  const Index d = halfspaces.directions.cols();
  const Matrix w = sphere_directions(d, rays, seed);
  const Eigen::LDLT<Matrix> shape(ellipsoid.shape);
  double gap = 0.0;
  for (std::size_t r = 0; r < rays; ++r) {
    const Vector ray = w.row(static_cast<Index>(r)).transpose();
    const Vector proj = halfspaces.directions * ray;
    double rho_h = kInf;
    for (Index i = 0; i < proj.size(); ++i)
      if (proj[i] > 0.0) rho_h = std::min(rho_h, halfspaces.bounds[i] / proj[i]);
    const double rho_e = std::sqrt(ellipsoid.level / ray.dot(shape.solve(ray)));
    gap = std::max(gap, rho_h - rho_e);
  }
  return gap * halfspaces.scale;
}

// ------------------------------------------------------------------- fairness

double chi2_1_quantile(double alpha) {
  const double z = normal_upper_quantile(alpha / 2.0);
  return z * z;
}

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double sigmoid_slope(double t) {
  const double s = sigmoid(t);
  return s * (1.0 - s);
}

// max|σ''| = 1/(6√3)
constexpr double kMaxSigmoidCurvature = 0.09622504486493763;

struct InnerSolution {
  double value = 0.0;  // sup_s wσ(z + s) − s²/T
  double shift = 0.0;  // the maximizing s
};

// sup_s wσ(z + s) − s²/T with T = ‖θ‖_p².
InnerSolution solve_inner(double w, double z, double T, std::size_t grid) {
  if (w == 0.0) return {0.0, 0.0};
  auto f = [&](double s) { return w * sigmoid(z + s) - s * s / T; };
  auto df = [&](double s) { return w * sigmoid_slope(z + s) - 2.0 * s / T; };
  const double reach = std::sqrt(T * std::abs(w));

  if (std::abs(w) * kMaxSigmoidCurvature < 2.0 / T) {
    // Concave: the unique stationary point lies between 0 and sign(w)·reach.
    double lo = std::min(0.0, std::copysign(reach, w));
    double hi = std::max(0.0, std::copysign(reach, w));
    double s = std::clamp(0.5 * T * w * sigmoid_slope(z), lo, hi);
    for (int it = 0; it < 100; ++it) {
      const double g = df(s);
      if (g > 0.0) lo = s; else hi = s;
      if (g == 0.0 || hi - lo <= 1e-15 * (1.0 + std::abs(s))) break;
      const double t = z + s;
      const double sg = sigmoid(t);
      const double curvature = w * sg * (1.0 - sg) * (1.0 - 2.0 * sg) - 2.0 / T;
      double next = s - g / curvature;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - s) <= 1e-16 * (1.0 + std::abs(s))) {
        s = next;
        break;
      }
      s = next;
    }
    return {f(s), s};
  }

  // Possibly two local maxima: grid, then bisection on the derivative.
  const std::size_t m = std::max<std::size_t>(grid, 3);
  double best_s = 0.0, best_v = f(0.0);
  std::size_t best_j = 0;
  std::vector<double> nodes(m);
  for (std::size_t j = 0; j < m; ++j) {
    nodes[j] = -reach + 2.0 * reach * static_cast<double>(j) / static_cast<double>(m - 1);
    const double v = f(nodes[j]);
    if (v > best_v) {
      best_v = v;
      best_s = nodes[j];
      best_j = j;
    }
  }
  if (best_v > f(0.0) || best_j != 0) {
    double lo = nodes[best_j > 0 ? best_j - 1 : 0];
    double hi = nodes[std::min(best_j + 1, m - 1)];
    if (df(lo) > 0.0 && df(hi) < 0.0) {
      for (int it = 0; it < 20; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (df(mid) > 0.0) lo = mid; else hi = mid;
      }
      const double s = 0.5 * (lo + hi);
      if (f(s) > best_v) {
        best_v = f(s);
        best_s = s;
      }
    }
  }
  return {best_v, best_s};
}

}  // namespace

FairnessTestReport fairness_test(const Matrix& features, const Vector& attribute, const Vector& label,
                                 const Vector& theta, const FairnessOptions& options) {
  const Index n = features.rows();
  require(n > 0, "empty sample");
  require(attribute.size() == n && label.size() == n, "attribute and label need one entry per row");
  require(theta.size() == features.cols(), "theta dimension does not match the features");
  require(options.alpha > 0.0 && options.alpha < 1.0, "alpha must be in (0, 1)");
  require(options.q >= 1.0, "q must be >= 1");
  const double p = conjugate_exponent(options.q);
  const double theta_norm = lp_norm(theta, p);
  require(theta_norm > 0.0, "theta must be nonzero");
  const double T = theta_norm * theta_norm;

  FairnessTestReport rep;
  Vector weight(n);  // I11/p11 − I01/p01
  std::vector<Index> active;
  for (Index i = 0; i < n; ++i) {
    if (label[i] == 1.0 && attribute[i] == 1.0) ++rep.n11;
    if (label[i] == 1.0 && attribute[i] == 0.0) ++rep.n01;
  }
  if (rep.n11 == 0 || rep.n01 == 0) fail(ErrorCode::EmptyGroup, "both groups (a, y) = (1, 1) and (0, 1) must be nonempty");
  const double nn = static_cast<double>(n);
  rep.p11 = static_cast<double>(rep.n11) / nn;
  rep.p01 = static_cast<double>(rep.n01) / nn;

  const Vector z = features * theta;
  Vector score(n);
  double m11 = 0.0, m01 = 0.0;
  for (Index i = 0; i < n; ++i) {
    score[i] = sigmoid(z[i]);
    const bool g11 = label[i] == 1.0 && attribute[i] == 1.0;
    const bool g01 = label[i] == 1.0 && attribute[i] == 0.0;
    weight[i] = (g11 ? 1.0 / rep.p11 : 0.0) - (g01 ? 1.0 / rep.p01 : 0.0);
    if (weight[i] != 0.0) active.push_back(i);
    if (g11) m11 += score[i] / nn;
    if (g01) m01 += score[i] / nn;
  }
  rep.mean_gap = m11 / rep.p11 - m01 / rep.p01;

  // β̂ from plug-in moments.
  double b = 0.0;
  Vector zvar(n);
  for (Index i = 0; i < n; ++i) {
    const double slope = score[i] * (1.0 - score[i]) * theta_norm * weight[i];
    b += slope * slope / nn;
    const double i11 = weight[i] > 0.0 ? 1.0 : 0.0;
    const double i01 = weight[i] < 0.0 ? 1.0 : 0.0;
    zvar[i] = score[i] * (rep.p01 * i11 - rep.p11 * i01) + i01 * m11 - i11 * m01;
  }
  rep.sigma_z_sq = (zvar.array() - zvar.mean()).square().sum() / nn;
  if (rep.sigma_z_sq <= 1e-12) fail(ErrorCode::DegenerateSigma, "variance of Z vanishes; the test is undefined");
  if (!(b > 0.0)) fail(ErrorCode::DegenerateSigma, "score gradient vanishes on the groups");
  rep.beta_hat = rep.sigma_z_sq / (rep.p01 * rep.p01 * rep.p11 * rep.p11) / b;
  rep.chi2_quantile = chi2_1_quantile(options.alpha);
  rep.threshold = rep.beta_hat * rep.chi2_quantile;

  // Profile: max_λ −(1/n) Σ sup_s {λ w_i σ(z_i + s) − s²/T}. The λ-derivative
  // is −(1/n) Σ w_i σ(z_i + s_i*) and decreases in λ.
  auto slope_at = [&](double lambda) {
    double total = 0.0;
    for (Index i : active) {
      const InnerSolution s = solve_inner(lambda * weight[i], z[i], T, options.inner_grid);
      total += weight[i] * sigmoid(z[i] + s.shift);
    }
    return -total / nn;
  };
  auto value_at = [&](double lambda) {
    double total = 0.0;
    for (Index i : active) total += solve_inner(lambda * weight[i], z[i], T, options.inner_grid).value;
    return -total / nn;
  };

  if (rep.mean_gap != 0.0) {
    const double dir = rep.mean_gap > 0.0 ? -1.0 : 1.0;
    double lo = 0.0;
    double hi = dir * std::max(1e-8, 2.0 * std::abs(rep.mean_gap) / b);
    for (int it = 0; it < 200 && dir * slope_at(hi) > 0.0; ++it) {
      lo = hi;
      hi *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (dir * slope_at(mid) > 0.0) lo = mid; else hi = mid;
      if (std::abs(hi - lo) <= 1e-13 * std::abs(hi)) break;
    }
    const double vlo = value_at(lo), vhi = value_at(hi);
    rep.lambda_star = vlo >= vhi ? lo : hi;
    rep.profile = std::max(0.0, std::max(vlo, vhi));
  }
  rep.statistic = nn * rep.profile;
  rep.reject = rep.statistic > rep.threshold;
  return rep;
}

}  // namespace wdro

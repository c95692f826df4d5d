#pragma once

#include "wdro/model.hpp"
#include "wdro/ot.hpp"
#include "wdro/radius.hpp"
#include "wdro/types.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace wdro {

/// {θ : u_iᵀ √n (θ − center) ≤ b_i for all i}.
struct HalfspaceRegion {
  Vector center;
  double scale = 1.0;  // n^{−1/2}
  Matrix directions;   // one unit direction per row
  Vector bounds;
};

/// {θ : n (θ − center)ᵀ shape⁻¹ (θ − center) ≤ level}.
struct EllipsoidRegion {
  Vector center;
  Matrix shape;
  double level = 0.0;
  double n = 1.0;
};

struct RegionOptions {
  double alpha = 0.1;
  std::size_t directions = 2000;
  std::size_t draws = 0;  // limit-law draws for η̂; 0 means default_draws(alpha)
  std::uint64_t seed = 0;
};

struct RegionResult {
  HalfspaceRegion halfspaces;
  std::optional<EllipsoidRegion> ellipsoid;
  RadiusEstimate radius;
  Matrix c_hat;
};

/// Confidence region centered at the ERM: Ĉ = mean D_θh, η̂ from the limit
/// law, bounds b_i = 2[η̂ φ̂(Ĉ⁻¹u_i)]^{1/2} for random unit directions u_i.
/// When φ̂ is quadratic (p = 2) and nondegenerate, the exact ellipsoid with
/// shape Ĉ⁻¹AĈ⁻¹ is returned too. Throws SingularHessian if Ĉ is singular.
RegionResult build_region(const EstimatingModel& model, const Matrix& samples, const CostSpec& cost,
                          const RegionOptions& options);

/// Same, with a given η̂ (skips the Monte Carlo step).
RegionResult build_region_with_level(const EstimatingModel& model, const Matrix& samples, const CostSpec& cost,
                                     double eta, std::size_t directions, std::uint64_t seed);

bool region_contains(const HalfspaceRegion& region, const Vector& theta);
bool region_contains(const EllipsoidRegion& region, const Vector& theta);

/// max_i √(η uᵢᵀÂuᵢ) / b_i: at most 1 (up to rounding) when the ellipsoid
/// lies inside every halfspace.
double ellipsoid_halfspace_ratio(const HalfspaceRegion& halfspaces, const EllipsoidRegion& ellipsoid);

/// Largest difference, over `rays` random unit rays from the center, between
/// the halfspace region's and the ellipsoid's boundary distance (θ scale).
double region_ray_gap(const HalfspaceRegion& halfspaces, const EllipsoidRegion& ellipsoid, std::size_t rays,
                      std::uint64_t seed);

/// Unit directions drawn uniformly on the sphere; row i uses stream (seed, i).
Matrix sphere_directions(Index dim, std::size_t count, std::uint64_t seed);

struct FairnessTestReport {
  double statistic = 0.0;  // n · P(P_n, θ)
  double profile = 0.0;
  double lambda_star = 0.0;
  double beta_hat = 0.0;
  double sigma_z_sq = 0.0;
  double chi2_quantile = 0.0;
  double threshold = 0.0;
  bool reject = false;
  double p11 = 0.0;
  double p01 = 0.0;
  std::size_t n11 = 0;
  std::size_t n01 = 0;
  double mean_gap = 0.0;  // group mean of the score, (1,1) minus (0,1)
};

struct FairnessOptions {
  double alpha = 0.05;
  std::size_t inner_grid = 512;
  double q = 2.0;
};

/// Equal-opportunity test for the logistic score σ(θᵀx); attribute and label
/// are 0/1 vectors. Only x may be transported.
FairnessTestReport fairness_test(const Matrix& features, const Vector& attribute, const Vector& label,
                                 const Vector& theta, const FairnessOptions& options = {});

/// χ²₁ quantile at level 1 − α.
double chi2_1_quantile(double alpha);

}  // namespace wdro

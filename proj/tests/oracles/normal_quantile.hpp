#pragma once

// Reference quantiles by bisection on closed-form CDFs built from std::erfc.
// Slow but independent of the library's Boost-backed quantile.

#include <cmath>

namespace oracle {

// x with P(Z > x) = q, Z standard normal; q in (0, 1).
inline double upper_normal_quantile(double q) {
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double tail = 0.5 * std::erfc(mid / std::sqrt(2.0));
    (tail > q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Φ⁻¹(p) = −Φ̄⁻¹(p) avoids forming 1 − p.
inline double normal_quantile(double p) { return -upper_normal_quantile(p); }

// χ² with 3 degrees of freedom: F(x) = erf(√(x/2)) − √(2x/π) e^{−x/2}.
inline double chi2_3_quantile(double p) {
  auto cdf = [](double x) { return std::erf(std::sqrt(x / 2.0)) - std::sqrt(2.0 * x / M_PI) * std::exp(-x / 2.0); };
  double lo = 0.0, hi = 200.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle

#pragma once

#include "wdro/types.hpp"

#include <functional>

namespace wdro {

/// Value plus gradient (or a supergradient for concave nonsmooth f). The
/// callee writes grad only when the value is finite; −∞ marks points outside
/// the effective domain.
using ValueGrad = std::function<double(const Vector& x, Vector& grad)>;

struct AscentOptions {
  int max_iterations = 1000;
  double gradient_tol = 1e-11;
};

struct AscentResult {
  Vector x;
  double value = -kInf;
  int iterations = 0;
  bool converged = false;
};

/// BFGS ascent for a concave objective with Armijo backtracking. Trial points
/// with non-finite value are rejected by halving the step. x0 must be in the
/// domain (finite value).
AscentResult maximize_concave(const ValueGrad& f, const Vector& x0, const AscentOptions& options = {});

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
};

/// Golden-section search for a unimodal f on [lo, hi]. The endpoints are also
/// evaluated, so a minimum sitting at the boundary is found exactly.
ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double x_tol = 1e-13, int max_iterations = 400);

struct ConjugateValue {
  double value = 0.0;
  Vector argmax;  // the maximizing ξ; also the gradient of the conjugate at z
};

/// sup_ξ { ξᵀz − φ(ξ) } for convex φ given with a (sub)gradient. Throws
/// UnboundedConjugate when the ascent runs off to infinity.
ConjugateValue numeric_conjugate(const ValueGrad& phi, const Vector& z, const Vector& start);

}  // namespace wdro

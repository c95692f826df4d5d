#include "wdro/optim.hpp"

#include "wdro/error.hpp"

#include <algorithm>
#include <cmath>

namespace wdro {

AscentResult maximize_concave(const ValueGrad& f, const Vector& x0, const AscentOptions& options) {
  const Index n = x0.size();
  AscentResult result;
  result.x = x0;
  Vector grad(n);
  result.value = f(result.x, grad);
  require(std::isfinite(result.value), "maximize_concave: start point outside the domain");

  Matrix H = Matrix::Identity(n, n);  // inverse Hessian approximation of −f
  Vector trial_grad(n);
  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    const double gnorm = grad.norm();
    if (gnorm <= options.gradient_tol * (1.0 + std::abs(result.value))) {
      result.converged = true;
      return result;
    }
    Vector dir = H * grad;
    double slope = grad.dot(dir);
    if (!(slope > 0.0)) {
      H.setIdentity();
      dir = grad;
      slope = grad.squaredNorm();
    }
    double step = 1.0;
    bool accepted = false;
    Vector trial;
    double trial_value = -kInf;
    for (int ls = 0; ls < 80; ++ls) {
      trial = result.x + step * dir;
      trial_value = f(trial, trial_grad);
      if (std::isfinite(trial_value) && trial_value >= result.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No ascent along this direction. Retry once from a steepest-ascent
      // reset before giving up.
      if (!H.isIdentity()) {
        H.setIdentity();
        continue;
      }
      result.converged = gnorm <= 1e-6 * (1.0 + std::abs(result.value));
      return result;
    }
    const Vector s = trial - result.x;
    const Vector y = grad - trial_grad;  // gradient change of −f
    const double sy = s.dot(y);
    const double improvement = trial_value - result.value;
    result.x = trial;
    result.value = trial_value;
    grad = trial_grad;
    if (sy > 1e-16 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      if (H.isIdentity()) H *= sy / y.squaredNorm();
      const Matrix I = Matrix::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    if (improvement <= 1e-16 * (1.0 + std::abs(result.value)) && s.norm() <= 1e-14 * (1.0 + result.x.norm())) {
      result.converged = grad.norm() <= 1e-6 * (1.0 + std::abs(result.value));
      return result;
    }
  }
  return result;
}

ScalarMinimum golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double x_tol, int max_iterations) {
  require(lo <= hi, "golden_section_minimize: empty bracket");
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iterations && (b - a) > x_tol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = f(d);
    }
  }
  ScalarMinimum best{c, fc};
  if (fd < best.value) best = {d, fd};
  const double mid = 0.5 * (a + b);
  const double fm = f(mid);
  if (fm < best.value) best = {mid, fm};
  const double flo = f(lo);
  if (flo <= best.value) best = {lo, flo};
  const double fhi = f(hi);
  if (fhi < best.value) best = {hi, fhi};
  return best;
}

ConjugateValue numeric_conjugate(const ValueGrad& phi, const Vector& z, const Vector& start) {
  Vector inner_grad(z.size());
  const double bound = 1e8 * (1.0 + z.norm() + start.norm());
  bool escaped = false;
  ValueGrad objective = [&](const Vector& xi, Vector& grad) {
    if (xi.norm() > bound) {
      escaped = true;
      return -kInf;
    }
    const double value = phi(xi, inner_grad);
    if (!std::isfinite(value)) return -kInf;
    grad = z - inner_grad;
    return xi.dot(z) - value;
  };
  AscentOptions options;
  options.max_iterations = 2000;
  options.gradient_tol = 1e-13;
  const AscentResult best = maximize_concave(objective, start, options);
  if (escaped && !best.converged) {
    fail(ErrorCode::UnboundedConjugate, "conjugate is +infinity at this point");
  }
  if (!best.converged && best.x.norm() > 1e6 * (1.0 + z.norm())) {
    fail(ErrorCode::UnboundedConjugate, "conjugate is +infinity at this point");
  }
  return {best.value, best.x};
}

}  // namespace wdro

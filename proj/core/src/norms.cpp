#include "wdro/norms.hpp"

#include "wdro/error.hpp"

#include <cmath>

namespace wdro {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InfeasibleCost: return "InfeasibleCost";
    case ErrorCode::UnboundedDual: return "UnboundedDual";
    case ErrorCode::InnerSupUnboundedForAllLambda: return "InnerSupUnboundedForAllLambda";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DegenerateResiduals: return "DegenerateResiduals";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::OutsideThetaTilde: return "OutsideThetaTilde";
    case ErrorCode::InnerSupUnboundedEverywhere: return "InnerSupUnboundedEverywhere";
    case ErrorCode::SingularA: return "SingularA";
    case ErrorCode::UnboundedConjugate: return "UnboundedConjugate";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::SingularHessian: return "SingularHessian";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::DegenerateSigma: return "DegenerateSigma";
    case ErrorCode::ZeroVariation: return "ZeroVariation";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::Unsupported: return "Unsupported";
  }
  return "Unknown";
}

double conjugate_exponent(double p) {
  require(p >= 1.0, "norm index must be >= 1");
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  if (p == 2.0) return 2.0;
  return p / (p - 1.0);
}

double lp_norm(const Vector& v, double p) {
  require(p >= 1.0, "norm index must be >= 1");
  if (v.size() == 0) return 0.0;
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  if (p == 1.0) return v.cwiseAbs().sum();
  if (p == 2.0) return v.norm();
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]) / scale, p);
  return scale * std::pow(acc, 1.0 / p);
}

Vector dual_direction(const Vector& v, double p) {
  Vector w = Vector::Zero(v.size());
  const double norm = lp_norm(v, p);
  if (norm == 0.0) return w;
  auto sgn = [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); };
  if (p == 1.0) {
    for (Index i = 0; i < v.size(); ++i) w[i] = sgn(v[i]);
    return w;
  }
  if (std::isinf(p)) {
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    w[arg] = sgn(v[arg]);
    return w;
  }
  for (Index i = 0; i < v.size(); ++i)
    w[i] = sgn(v[i]) * std::pow(std::abs(v[i]) / norm, p - 1.0);
  return w;
}

Vector holder_maximizer(const Vector& theta, double p) {
  require(p >= 1.0 && std::isfinite(p), "holder_maximizer needs finite p >= 1");
  const double q = conjugate_exponent(p);
  const double norm = lp_norm(theta, p);
  Vector delta = Vector::Zero(theta.size());
  if (norm == 0.0) return delta;
  const double ratio = std::isinf(q) ? 0.0 : p / q;
  const double lead = std::pow(norm, 1.0 - ratio);
  for (Index i = 0; i < theta.size(); ++i) {
    const double s = theta[i] > 0 ? 1.0 : (theta[i] < 0 ? -1.0 : 0.0);
    delta[i] = lead * s * std::pow(std::abs(theta[i]), ratio);
  }
  return delta;
}

}  // namespace wdro

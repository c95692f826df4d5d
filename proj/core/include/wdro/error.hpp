#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wdro {

/// Machine-readable failure categories. The CLI reports them verbatim.
enum class ErrorCode {
  InvalidArgument,
  InfeasibleCost,
  UnboundedDual,
  InnerSupUnboundedForAllLambda,
  RankDeficient,
  DegenerateResiduals,
  Infeasible,
  OutsideThetaTilde,
  InnerSupUnboundedEverywhere,
  SingularA,
  UnboundedConjugate,
  SingularCovariance,
  SingularHessian,
  EmptyGroup,
  DegenerateSigma,
  ZeroVariation,
  ParseError,
  MissingColumn,
  NonNumericCell,
  SchemaViolation,
  Unsupported,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::InvalidArgument, message);
}

}  // namespace wdro

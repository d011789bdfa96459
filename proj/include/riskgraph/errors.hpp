#pragma once

#include <stdexcept>
#include <string>

namespace riskgraph {

enum class ErrorCode {
  NoHazardSource,
  BadSplit,
  BackendUnavailable,
  SchemaViolation,
  UnknownRiskLevel,
  MissingAnnotation,
  InvalidRiskValue,
  BadConfig,
  NumericalFailure,
  TrainingDiverged,
  IncompatibleCheckpoint,
  UnterminatedPlan,
  UnknownAction,
  PlanParseFailure,
  ActionInfeasible,
  ProbabilityDomain,
  NoPositives,
  IoError,
};

const char* to_string(ErrorCode code);

/// Domain error carrying one of the stable error codes above.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace riskgraph

#include "riskgraph/errors.hpp"

namespace riskgraph {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoHazardSource: return "NoHazardSource";
    case ErrorCode::BadSplit: return "BadSplit";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::UnknownRiskLevel: return "UnknownRiskLevel";
    case ErrorCode::MissingAnnotation: return "MissingAnnotation";
    case ErrorCode::InvalidRiskValue: return "InvalidRiskValue";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::TrainingDiverged: return "TrainingDiverged";
    case ErrorCode::IncompatibleCheckpoint: return "IncompatibleCheckpoint";
    case ErrorCode::UnterminatedPlan: return "UnterminatedPlan";
    case ErrorCode::UnknownAction: return "UnknownAction";
    case ErrorCode::PlanParseFailure: return "PlanParseFailure";
    case ErrorCode::ActionInfeasible: return "ActionInfeasible";
    case ErrorCode::ProbabilityDomain: return "ProbabilityDomain";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace riskgraph

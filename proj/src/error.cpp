#include "fincon/error.hpp"

namespace fincon {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::NonMonotoneDates: return "NonMonotoneDates";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::DateOutOfRange: return "DateOutOfRange";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::FutureEvent: return "FutureEvent";
    case ErrorCode::UnknownEventId: return "UnknownEventId";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::SchemaViolationAfterRetries: return "SchemaViolationAfterRetries";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MissingScriptEntry: return "MissingScriptEntry";
    case ErrorCode::MissingAnalystReport: return "MissingAnalystReport";
    case ErrorCode::IllegalRoute: return "IllegalRoute";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::IncompleteEpisode: return "IncompleteEpisode";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::NonPSDMatrix: return "NonPSDMatrix";
    case ErrorCode::SolverNonConvergence: return "SolverNonConvergence";
    case ErrorCode::InsufficientCandidates: return "InsufficientCandidates";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::ZeroVolatility: return "ZeroVolatility";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::MissingTrainingArtifacts: return "MissingTrainingArtifacts";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::MissingTrajectory: return "MissingTrajectory";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

SchemaError::SchemaError(std::size_t row, std::string column, const std::string& detail)
    : Error(ErrorCode::SchemaError,
            "row " + std::to_string(row) + ", column '" + column + "': " + detail),
      row_(row),
      column_(std::move(column)) {}

void raise(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace fincon

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fincon {

enum class ErrorCode : std::uint8_t {
  // data_ingest
  FileNotFound,
  SchemaError,
  NonMonotoneDates,
  NonPositivePrice,
  InsufficientHistory,
  DateOutOfRange,
  // memory
  ZeroVector,
  DimensionMismatch,
  FutureEvent,
  UnknownEventId,
  // llm_gateway
  BackendUnavailable,
  SchemaViolationAfterRetries,
  Timeout,
  MissingScriptEntry,
  // agents
  MissingAnalystReport,
  IllegalRoute,
  // risk_control
  EmptyHistory,
  AlphaOutOfRange,
  LengthMismatch,
  EmptySequence,
  IncompleteEpisode,
  // portfolio
  InsufficientSamples,
  NonPSDMatrix,
  SolverNonConvergence,
  InsufficientCandidates,
  // backtest / metrics
  EmptyTrajectory,
  ZeroVolatility,
  InsufficientData,
  EmptySeries,
  NonPositiveValue,
  MissingTrainingArtifacts,
  TooFewPairs,
  MissingTrajectory,
  // general
  ConfigError,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the engine. The code is the
/// stable, machine-checkable part; the message is for humans.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

/// Row/column-addressed validation failure in an input file. Rows are
/// 1-based data rows (the header line is not counted).
class SchemaError : public Error {
public:
  SchemaError(std::size_t row, std::string column, const std::string& detail);

  [[nodiscard]] std::size_t row() const noexcept { return row_; }
  [[nodiscard]] const std::string& column() const noexcept { return column_; }

private:
  std::size_t row_;
  std::string column_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace fincon

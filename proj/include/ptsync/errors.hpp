#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ptsync {

enum class ErrorCode {
  InvalidParameters,
  DimensionMismatch,
  NonSquare,
  NotSymmetric,
  DegenerateKernel,
  NonPositiveEntry,
  TimeOutOfRange,
  UnsupportedRegulator,
  MissingPinning,
  NotNegativeInTS,
  NotNegativeDefinite,
  AssumptionViolated,
  Blowup,
  NonFiniteState,
  StepUnderflow,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::DegenerateKernel: return "DegenerateKernel";
    case ErrorCode::NonPositiveEntry: return "NonPositiveEntry";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::UnsupportedRegulator: return "UnsupportedRegulator";
    case ErrorCode::MissingPinning: return "MissingPinning";
    case ErrorCode::NotNegativeInTS: return "NotNegativeInTS";
    case ErrorCode::NotNegativeDefinite: return "NotNegativeDefinite";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::Blowup: return "Blowup";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Process exit status for a failure: 2 input error, 3 assumption
/// violation, 4 numerical failure.
constexpr int exit_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegenerateKernel:
    case ErrorCode::NonPositiveEntry:
    case ErrorCode::NotNegativeInTS:
    case ErrorCode::NotNegativeDefinite:
    case ErrorCode::AssumptionViolated:
      return 3;
    case ErrorCode::Blowup:
    case ErrorCode::NonFiniteState:
    case ErrorCode::StepUnderflow:
      return 4;
    default:
      return 2;
  }
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ptsync

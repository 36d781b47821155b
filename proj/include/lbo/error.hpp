#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lbo {

enum class ErrorCode {
  InvalidParameter,
  IndexBeyondValidity,
  MatrixRangeExceeded,
  SpaceMismatch,
  ValidityExhausted,
  WeightLengthMismatch,
  HorizonTooSmall,
  UnboundedInput,
  NotInvertible,
  ModulusUnavailable,
  EmptyReturnSet,
  NoConvergentSubsequence,
  Overflow,
  StarFamilyExhausted,
  ConstructionFailed,
  WindowOutOfRange,
  HypothesisFailed,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::IndexBeyondValidity: return "IndexBeyondValidity";
    case ErrorCode::MatrixRangeExceeded: return "MatrixRangeExceeded";
    case ErrorCode::SpaceMismatch: return "SpaceMismatch";
    case ErrorCode::ValidityExhausted: return "ValidityExhausted";
    case ErrorCode::WeightLengthMismatch: return "WeightLengthMismatch";
    case ErrorCode::HorizonTooSmall: return "HorizonTooSmall";
    case ErrorCode::UnboundedInput: return "UnboundedInput";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::ModulusUnavailable: return "ModulusUnavailable";
    case ErrorCode::EmptyReturnSet: return "EmptyReturnSet";
    case ErrorCode::NoConvergentSubsequence: return "NoConvergentSubsequence";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::StarFamilyExhausted: return "StarFamilyExhausted";
    case ErrorCode::ConstructionFailed: return "ConstructionFailed";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::HypothesisFailed: return "HypothesisFailed";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code. `detail` holds the one
/// integer some errors report (achieved horizon, offending basis index,
/// deepest stabilized coordinate).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::size_t detail = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::size_t detail_;
};

inline void require(bool cond, ErrorCode code, const std::string& what,
                    std::size_t detail = 0) {
  if (!cond) throw Error(code, what, detail);
}

}  // namespace lbo

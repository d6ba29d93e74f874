#pragma once

#include <stdexcept>
#include <string>

namespace msphs {

enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  InsufficientData,
  Factorization,
  NonFinite,
  OutOfRange,
  Io,
};

/// Library-wide exception carrying a machine-readable error code.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  const char* code_name() const noexcept {
    switch (code_) {
      case ErrorCode::DimensionMismatch: return "dimension_mismatch";
      case ErrorCode::InvalidArgument:   return "invalid_argument";
      case ErrorCode::InsufficientData:  return "insufficient_data";
      case ErrorCode::Factorization:     return "factorization";
      case ErrorCode::NonFinite:         return "non_finite";
      case ErrorCode::OutOfRange:        return "out_of_range";
      case ErrorCode::Io:                return "io";
    }
    return "unknown";
  }

private:
  ErrorCode code_;
};

}  // namespace msphs

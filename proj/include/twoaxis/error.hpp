#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twoaxis {

/// Coarse classification of failures; the CLI maps each one to an exit code.
enum class ErrorCategory {
  invalid_argument,  // bad input to a library call (zero atoms, bad grid, ...)
  config,            // unparsable or inconsistent configuration
  validation,        // physics-level validation failed (zero detuning, eta != 0, ...)
  dimension,         // tensor/matrix dimension mismatch or overflow
  numerical,         // solver misbehaviour (norm drift, non-Hermitian input)
  degenerate_frame,  // mean spin length too small to define a frame
  io,                // filesystem problems
  flagged,           // a flagged result promoted to failure (--strict)
};

inline std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_argument: return "invalid_argument";
    case ErrorCategory::config: return "config";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::dimension: return "dimension";
    case ErrorCategory::numerical: return "numerical";
    case ErrorCategory::degenerate_frame: return "degenerate_frame";
    case ErrorCategory::io: return "io";
    case ErrorCategory::flagged: return "flagged";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& what) {
  throw Error(category, what);
}

}  // namespace twoaxis

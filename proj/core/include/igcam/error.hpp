#pragma once

#include <stdexcept>
#include <string>

namespace igcam {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorCategory {
  usage = 2,       // bad flags / flag combinations
  input = 3,       // unreadable or malformed files
  validation = 4,  // shape mismatches, non-finite values, numeric preconditions
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

  const char* category_name() const {
    switch (category_) {
      case ErrorCategory::usage: return "usage";
      case ErrorCategory::input: return "input";
      case ErrorCategory::validation: return "validation";
    }
    return "unknown";
  }

 private:
  ErrorCategory category_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message)
      : Error(ErrorCategory::usage, message) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& message)
      : Error(ErrorCategory::input, message) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

// Thrown when a metric has no defined value (e.g. EBPG of an all-zero map).
// Dataset evaluation catches this and counts the image as skipped.
class UndefinedMetricError : public ValidationError {
 public:
  explicit UndefinedMetricError(const std::string& message)
      : ValidationError(message) {}
};

}  // namespace igcam

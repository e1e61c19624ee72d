#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nrsim {

enum class ErrorCode {
  InvalidNumerology,
  BandwidthTooNarrow,
  InvalidAddress,
  NonPositiveDistance,
  InvalidMcs,
  OverlapError,
  GrantTooSmall,
  BudgetExceeded,
  UnroutedQosClass,
  ConfigError,
  ParseError,
  ValidationError,
  EmptyFlow,
  InvariantError,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the simulator library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Scenario parse failure with the offending line (1-based; 0 when unknown).
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& msg)
      : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// One validation finding. `code` names the rule that failed.
struct ValidationIssue {
  ErrorCode code;
  std::string message;
};

/// All validation findings of a scenario, collected rather than first-fail.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues);

  const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }
  bool contains(ErrorCode code) const;

 private:
  std::vector<ValidationIssue> issues_;
};

}  // namespace nrsim

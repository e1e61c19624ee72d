#include "nrsim/error.hpp"

#include <algorithm>

namespace nrsim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidNumerology: return "InvalidNumerology";
    case ErrorCode::BandwidthTooNarrow: return "BandwidthTooNarrow";
    case ErrorCode::InvalidAddress: return "InvalidAddress";
    case ErrorCode::NonPositiveDistance: return "NonPositiveDistance";
    case ErrorCode::InvalidMcs: return "InvalidMcs";
    case ErrorCode::OverlapError: return "OverlapError";
    case ErrorCode::GrantTooSmall: return "GrantTooSmall";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::UnroutedQosClass: return "UnroutedQosClass";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::EmptyFlow: return "EmptyFlow";
    case ErrorCode::InvariantError: return "InvariantError";
  }
  return "Unknown";
}

namespace {

std::string join_issues(const std::vector<ValidationIssue>& issues) {
  std::string out;
  for (const auto& issue : issues) {
    if (!out.empty()) out += "; ";
    out += std::string(to_string(issue.code)) + " (" + issue.message + ")";
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<ValidationIssue> issues)
    : Error(ErrorCode::ValidationError, join_issues(issues)), issues_(std::move(issues)) {}

bool ValidationError::contains(ErrorCode code) const {
  return std::any_of(issues_.begin(), issues_.end(),
                     [code](const ValidationIssue& i) { return i.code == code; });
}

}  // namespace nrsim

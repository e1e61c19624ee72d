#pragma once

#include <span>
#include <string>
#include <vector>

#include "nrsim/trace.hpp"

namespace nrsim {

struct Finding {
  /// disjointness, timing, sr_necessity, bsr_honesty, conservation, clock, order
  std::string rule;
  /// 1-based data row index (header excluded); 0 for end-of-trace findings.
  std::size_t row = 0;
  std::string message;
};

/// Offline validation of a trace against the scheduling, handshake and
/// accounting contracts. The numerology of each bandwidth part comes from
/// the `mu` annotations of SLOT_START and DCI rows.
std::vector<Finding> check_trace(std::span<const TraceRow> rows);
std::vector<Finding> check_trace_file(const std::string& path);

}  // namespace nrsim

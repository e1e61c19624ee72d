#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nrsim/engine.hpp"
#include "nrsim/scenario.hpp"

namespace nrsim {

/// %.6g rendering used for every non-integer number of the summary.
std::string format_number(double v);

/// summary.json with a fixed field order.
std::string format_summary_json(const RunResult& result, const Scenario& scenario);

/// Frame-structure table as CSV, one row per numerology.
std::string format_frame_table(const std::vector<int>& mus, std::int64_t bandwidth_hz);

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

/// "a=1,2;b=x,y" -> axes in the order given.
std::vector<SweepAxis> parse_grid(std::string_view spec);
/// Cartesian product; the last axis varies fastest. Each point is a list of
/// "key=value" overrides.
std::vector<std::vector<std::string>> expand_grid(const std::vector<SweepAxis>& axes);

struct SweepPoint {
  std::vector<std::string> overrides;
  std::string dir;
  RunResult result;
  std::uint64_t seed = 0;
  std::string error;
};

/// Runs every grid point (up to `jobs` at a time), writing trace.csv and
/// summary.json under out_dir/run_NNN plus sweep.csv and sweep_seeds.csv
/// (class geometric means across seeds) in out_dir.
std::vector<SweepPoint> run_sweep(const std::string& scenario_path, const std::vector<SweepAxis>& axes,
                                  const std::vector<std::string>& base_overrides, const std::string& out_dir,
                                  int jobs, bool write_traces = true);

}  // namespace nrsim

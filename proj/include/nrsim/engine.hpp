#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "nrsim/scenario.hpp"
#include "nrsim/trace.hpp"

namespace nrsim {

/// Time-ordered queue; equal timestamps pop in insertion order.
class EventQueue {
 public:
  using Action = std::function<void()>;

  /// Throws InvariantError for a timestamp before now().
  void schedule(TimeNs ts, Action action);
  bool empty() const { return heap_.empty(); }
  TimeNs next_ts() const { return heap_.top().ts; }
  /// Pops the earliest event, advances now() and runs it.
  void run_next();
  TimeNs now() const { return now_; }
  std::uint64_t processed() const { return processed_; }

 private:
  struct Event {
    TimeNs ts;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.ts != b.ts ? a.ts > b.ts : a.seq > b.seq;
    }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t seq_ = 0;
  std::uint64_t processed_ = 0;
  TimeNs now_ = 0;
};

/// Arrival times in [start, min(stop, horizon)). CBR spacing is
/// size*8/rate seconds, each arrival rounded to the nearest ns from start.
std::vector<TimeNs> cbr_generate(const FlowSpec& spec, TimeNs horizon);
std::vector<TimeNs> generate_arrivals(const FlowSpec& spec, TimeNs horizon);

/// Nearest-rank percentile of sorted values (q in (0, 1]).
TimeNs nearest_rank(std::span<const TimeNs> sorted, double q);
/// Geometric mean of positive values; 0 for an empty input.
double geo_mean(std::span<const double> values);

struct FlowStats {
  std::uint32_t flow_id = 0;
  std::string qos;
  Direction direction = Direction::UL;
  UeId ue = 0;
  std::vector<TimeNs> delays;
  std::int64_t generated_packets = 0;
  std::int64_t generated_bytes = 0;
  std::int64_t delivered_packets = 0;
  std::int64_t delivered_bytes = 0;
  /// Filled by the engine at stop time; zero when computed from a trace.
  std::int64_t buffered_bytes = 0;
  std::int64_t in_flight_bytes = 0;
  std::int64_t dropped_bytes = 0;
  std::int64_t sr_count = 0;
  TimeNs active_duration = 0;

  bool empty() const { return delivered_packets == 0; }
  double delay_mean_ns() const;
  TimeNs delay_p80_ns() const;
  TimeNs delay_min_ns() const;
  TimeNs delay_max_ns() const;
  double goodput_bps() const;
};

struct ClassStats {
  std::string qos;
  /// Geometric mean over non-empty flows of their mean delay.
  double delay_geo_mean_ns = 0;
  double goodput_geo_mean_bps = 0;
  std::size_t flows = 0;
  std::vector<std::uint32_t> empty_flows;
};

struct RunResult {
  std::vector<FlowStats> flows;
  std::vector<ClassStats> classes;
  /// SR emissions per UE over all bandwidth parts.
  std::map<UeId, std::int64_t> sr_per_ue;
  std::map<UeId, double> distance_m;
  std::uint64_t events = 0;
  std::uint64_t trace_rows = 0;

  const FlowStats& flow(std::uint32_t id) const;
  const ClassStats* class_stats(const std::string& qos) const;
};

/// Aggregates the per-class geometric means in place.
void aggregate_classes(RunResult& result, const std::vector<QosClass>& classes);

/// Per-flow statistics rebuilt from PKT_ARRIVAL / PKT_DELIVERED / SR rows.
RunResult collect_stats(std::span<const TraceRow> trace, const Scenario& scenario);

/// Simulates the scenario until its stop time. Trace rows go to `trace`
/// (header first) when given. Throws InvariantError on an internal breach.
RunResult run(const Scenario& scenario, std::ostream* trace = nullptr);
/// Same, delivering every row to a callback instead of a stream.
RunResult run(const Scenario& scenario, const std::function<void(const TraceRow&)>& sink);

/// Distance of a UE: the configured one, else drawn from the placement
/// annulus with the (seed, placement, ue) stream.
double ue_distance(const Scenario& scenario, const UeSpec& ue);

}  // namespace nrsim

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nrsim/bwp.hpp"
#include "nrsim/phy.hpp"

namespace nrsim {

enum class GeneratorKind { CBR, ONOFF };
enum class TraceSlots { Active, All, None };

std::string_view to_string(GeneratorKind g);
std::string_view to_string(TraceSlots t);

struct FlowSpec {
  std::uint32_t id = 0;
  UeId ue = 0;
  Direction direction = Direction::UL;
  std::string qos;
  GeneratorKind generator = GeneratorKind::CBR;
  std::int64_t rate_bps = 0;
  std::int64_t size_bytes = 0;
  TimeNs start = 0;
  /// Exclusive end of generation; unset means the scenario stop time.
  std::optional<TimeNs> stop;
  /// ONOFF only.
  TimeNs on = 0;
  TimeNs off = 0;

  friend bool operator==(const FlowSpec&, const FlowSpec&) = default;
};

struct UeSpec {
  UeId id = 0;
  /// Drawn from the placement annulus when unset.
  std::optional<double> distance_m;
  int beam = 0;

  friend bool operator==(const UeSpec&, const UeSpec&) = default;
};

struct CoreLinkConfig {
  TimeNs latency = 0;
  std::int64_t capacity_bps = 10'000'000'000;

  friend bool operator==(const CoreLinkConfig&, const CoreLinkConfig&) = default;
};

struct PlacementConfig {
  double min_distance_m = 1.0;
  double max_distance_m = 15.0;

  friend bool operator==(const PlacementConfig&, const PlacementConfig&) = default;
};

struct Scenario {
  std::uint64_t seed = 1;
  TimeNs stop = kNsPerS;
  ChannelParams channel;
  ErrorModel error_model;
  /// Path as written in the file; empty means the built-in table.
  std::string mcs_table_path;
  McsTable mcs_table = default_mcs_table();
  CoreLinkConfig core;
  TraceSlots trace_slots = TraceSlots::Active;
  PlacementConfig placement;
  BwpDeployment deployment;
  std::vector<QosClass> classes;
  std::vector<UeSpec> ues;
  std::vector<FlowSpec> flows;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Untyped scenario tree: `name { ... }` sections and `key = value` leaves.
struct ConfigNode {
  struct Leaf {
    std::string key;
    std::string value;
    int line = 0;
  };
  struct Section;
  std::vector<Leaf> leaves;
  std::vector<Section> sections;
};

struct ConfigNode::Section {
  std::string name;
  ConfigNode body;
  int line = 0;
};

ConfigNode parse_config(std::string_view text);

/// Dotted-path substitution such as "deployment.parts[0].timing.k2=4".
void apply_override(ConfigNode& root, std::string_view assignment);

/// Typed conversion and full validation. `base_dir` resolves mcs_table.
Scenario build_scenario(const ConfigNode& root, const std::string& base_dir = ".");
Scenario parse_scenario(std::string_view text, const std::vector<std::string>& overrides = {},
                        const std::string& base_dir = ".");
/// Throws ParseError (also for a missing file) or ValidationError.
Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {});

/// Canonical text form; parsing it yields an equal Scenario.
std::string emit_scenario(const Scenario& s);
std::uint64_t scenario_hash(const Scenario& s);

/// Unit-suffixed value parsers (exposed for tests).
TimeNs parse_duration(std::string_view v);
std::int64_t parse_frequency(std::string_view v);
std::int64_t parse_rate(std::string_view v);
DecodeLatency parse_decode_latency(std::string_view v);
std::string format_decode_latency(const DecodeLatency& d);

}  // namespace nrsim

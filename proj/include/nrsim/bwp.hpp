#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nrsim/error.hpp"
#include "nrsim/frame.hpp"
#include "nrsim/phy.hpp"
#include "nrsim/sched.hpp"

namespace nrsim {

struct QosClass {
  std::string id;
  std::string label;

  friend bool operator==(const QosClass&, const QosClass&) = default;
};

struct BwpConfig {
  int bwp_id = 0;
  Numerology mu;
  std::int64_t bandwidth_hz = 0;
  /// Lower edge relative to the channel's lower edge; packed when unset.
  std::optional<std::int64_t> offset_hz;
  /// Filled from derive_frame_structure by validate_deployment.
  int prb_count = 0;
  double tx_power_dbm = 30.0;
  PolicyConfig policy;
  PhyTimingConfig timing;

  friend bool operator==(const BwpConfig&, const BwpConfig&) = default;
};

struct BwpDeployment {
  std::int64_t total_bandwidth_hz = 0;
  std::vector<BwpConfig> parts;
  /// qos class id -> bwp_id.
  std::map<std::string, int> routing;

  const BwpConfig& part(int bwp_id) const;
  friend bool operator==(const BwpDeployment&, const BwpDeployment&) = default;
};

/// Lower edge of every part after packing, in declaration order.
std::vector<std::int64_t> part_offsets(const BwpDeployment& dep);

/// Appends every problem found (budget, overlap, routing, per-part timing
/// and frame derivation). Fills prb_count of each part as a side effect.
void validate_deployment(BwpDeployment& dep, const std::vector<QosClass>& classes,
                         std::vector<ValidationIssue>& issues);
/// Throwing form: ValidationError carrying every issue.
void validate_deployment(BwpDeployment& dep, const std::vector<QosClass>& classes);

/// Routing lookup. A single-part deployment takes every class.
int route(const BwpDeployment& dep, const std::string& qos_id);

}  // namespace nrsim

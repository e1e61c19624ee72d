#include "nrsim/bwp.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace nrsim {

const BwpConfig& BwpDeployment::part(int bwp_id) const {
  for (const auto& p : parts) {
    if (p.bwp_id == bwp_id) return p;
  }
  throw Error(ErrorCode::ConfigError, "no bandwidth part " + std::to_string(bwp_id));
}

std::vector<std::int64_t> part_offsets(const BwpDeployment& dep) {
  std::vector<std::int64_t> out;
  std::int64_t cursor = 0;
  for (const auto& p : dep.parts) {
    const std::int64_t lo = p.offset_hz.value_or(cursor);
    out.push_back(lo);
    cursor = lo + p.bandwidth_hz;
  }
  return out;
}

void validate_deployment(BwpDeployment& dep, const std::vector<QosClass>& classes,
                         std::vector<ValidationIssue>& issues) {
  auto issue = [&](ErrorCode c, std::string msg) { issues.push_back({c, std::move(msg)}); };
  if (dep.total_bandwidth_hz <= 0) issue(ErrorCode::ConfigError, "total_bandwidth must be positive");
  if (dep.parts.empty()) issue(ErrorCode::ConfigError, "deployment has no bandwidth parts");

  std::set<int> ids;
  std::int64_t sum = 0;
  for (auto& p : dep.parts) {
    const std::string where = "bwp " + std::to_string(p.bwp_id);
    if (!ids.insert(p.bwp_id).second) issue(ErrorCode::ConfigError, where + ": duplicate bwp id");
    sum += p.bandwidth_hz;
    try {
      const auto fs = derive_frame_structure(p.mu, p.bandwidth_hz);
      p.prb_count = fs.prb_count;
    } catch (const Error& e) {
      issue(e.code(), where + ": " + e.what());
    }
    validate_timing(p.timing, issues, where);
    if (!(p.policy.alpha >= 0) || !std::isfinite(p.policy.alpha)) {
      issue(ErrorCode::ConfigError, where + ": PF alpha must be finite and >= 0");
    }
  }
  if (sum > dep.total_bandwidth_hz) {
    issue(ErrorCode::BudgetExceeded, "parts use " + std::to_string(sum) + " Hz of " +
                                         std::to_string(dep.total_bandwidth_hz) + " Hz");
  }

  const auto offsets = part_offsets(dep);
  for (std::size_t i = 0; i < dep.parts.size(); ++i) {
    const auto lo = offsets[i];
    const auto hi = lo + dep.parts[i].bandwidth_hz;
    if (lo < 0 || hi > dep.total_bandwidth_hz) {
      issue(ErrorCode::BudgetExceeded,
            "bwp " + std::to_string(dep.parts[i].bwp_id) + " lies outside the channel");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const auto lo2 = offsets[j];
      const auto hi2 = lo2 + dep.parts[j].bandwidth_hz;
      if (lo < hi2 && lo2 < hi) {
        issue(ErrorCode::OverlapError, "bwp " + std::to_string(dep.parts[i].bwp_id) + " overlaps bwp " +
                                           std::to_string(dep.parts[j].bwp_id));
      }
    }
  }

  std::set<std::string> class_ids;
  for (const auto& c : classes) {
    if (!class_ids.insert(c.id).second) issue(ErrorCode::ConfigError, "duplicate qos class " + c.id);
  }
  for (const auto& [qos, bwp] : dep.routing) {
    if (!ids.count(bwp)) {
      issue(ErrorCode::ConfigError, "route for " + qos + " names unknown bwp " + std::to_string(bwp));
    }
    if (!class_ids.count(qos)) issue(ErrorCode::ConfigError, "route for undeclared qos class " + qos);
  }
  if (dep.parts.size() > 1) {
    for (const auto& c : classes) {
      if (!dep.routing.count(c.id)) issue(ErrorCode::UnroutedQosClass, "qos class " + c.id + " has no route");
    }
  }
}

void validate_deployment(BwpDeployment& dep, const std::vector<QosClass>& classes) {
  std::vector<ValidationIssue> issues;
  validate_deployment(dep, classes, issues);
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

int route(const BwpDeployment& dep, const std::string& qos_id) {
  const auto it = dep.routing.find(qos_id);
  if (it != dep.routing.end()) return it->second;
  if (dep.parts.size() == 1) return dep.parts.front().bwp_id;
  throw Error(ErrorCode::UnroutedQosClass, "qos class " + qos_id + " has no route");
}

}  // namespace nrsim

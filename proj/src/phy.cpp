#include "nrsim/phy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nrsim {

void validate_timing(const PhyTimingConfig& t, std::vector<ValidationIssue>& issues,
                     const std::string& where) {
  auto bad = [&](const std::string& msg) {
    issues.push_back({ErrorCode::ConfigError, where + ": " + msg});
  };
  if (t.k2 < 0 || t.k2 > 32) bad("k2 must be in 0..32");
  if (t.l1l2_ctrl_latency < 0) bad("l1l2_ctrl_latency must be >= 0");
  if (t.l1l2_data_latency < 0) bad("l1l2_data_latency must be >= 0");
  if (t.mac_to_phy_delay != t.l1l2_data_latency) {
    bad("mac_to_phy_delay must equal l1l2_data_latency");
  }
  const auto& dec = t.ue_decode_latency;
  if (dec.mode == DecodeLatency::Mode::Fixed ? dec.fixed_ns < 0 : dec.slot_multiple < 0) {
    bad("ue_decode_latency must be >= 0");
  }
}

double path_loss_db(double distance_m, const ChannelParams& ch) {
  return ch.ref_loss_db + 10.0 * ch.exponent * std::log10(distance_m / ch.ref_distance_m);
}

double compute_sinr(double tx_power_dbm, double distance_m, const ChannelParams& ch) {
  if (!(distance_m > 0.0)) {
    throw Error(ErrorCode::NonPositiveDistance, "distance " + std::to_string(distance_m) + " m");
  }
  const double rx = tx_power_dbm - path_loss_db(distance_m, ch);
  if (std::isinf(ch.interference_dbm) && ch.interference_dbm < 0) return rx - ch.noise_dbm;
  const double floor_mw =
      std::pow(10.0, ch.noise_dbm / 10.0) + std::pow(10.0, ch.interference_dbm / 10.0);
  return rx - 10.0 * std::log10(floor_mw);
}

int sinr_to_cqi(double sinr_db) {
  if (std::isnan(sinr_db)) return 0;
  // The epsilon keeps exact bucket edges (-6 + 2.4k) in the upper bucket.
  const double q = std::floor((sinr_db + 6.0) / 2.4 + 1e-9);
  return static_cast<int>(std::clamp(q, 0.0, 15.0));
}

int cqi_to_mcs(int cqi) { return std::clamp(cqi, 0, 15) * (kMcsCount - 1) / 15; }

double sinr_min_for_mcs(int mcs) {
  if (mcs < 0 || mcs >= kMcsCount) throw Error(ErrorCode::InvalidMcs, std::to_string(mcs));
  for (int cqi = 0; cqi <= 15; ++cqi) {
    if (cqi_to_mcs(cqi) >= mcs) {
      return cqi == 0 ? -std::numeric_limits<double>::infinity() : -6.0 + 2.4 * cqi;
    }
  }
  return std::numeric_limits<double>::infinity();
}

LinkState make_link_state(double tx_power_dbm, double distance_m, const ChannelParams& ch) {
  LinkState ls;
  ls.distance_m = distance_m;
  ls.sinr_db = compute_sinr(tx_power_dbm, distance_m, ch);
  ls.cqi = sinr_to_cqi(ls.sinr_db);
  ls.mcs = cqi_to_mcs(ls.cqi);
  return ls;
}

McsTable::McsTable(std::vector<std::int64_t> micro_efficiency) : eff_(std::move(micro_efficiency)) {
  if (eff_.size() != static_cast<std::size_t>(kMcsCount)) {
    throw Error(ErrorCode::ConfigError, "MCS table needs 29 rows, got " + std::to_string(eff_.size()));
  }
  for (std::size_t i = 0; i < eff_.size(); ++i) {
    if (eff_[i] <= 0) throw Error(ErrorCode::ConfigError, "non-positive efficiency at mcs " + std::to_string(i));
    if (i > 0 && eff_[i] < eff_[i - 1]) {
      throw Error(ErrorCode::ConfigError, "MCS efficiencies must be non-decreasing");
    }
  }
}

std::int64_t McsTable::micro_efficiency(int mcs) const {
  if (mcs < 0 || mcs >= size()) throw Error(ErrorCode::InvalidMcs, std::to_string(mcs));
  return eff_[static_cast<std::size_t>(mcs)];
}

const McsTable& default_mcs_table() {
  static const McsTable table = [] {
    std::vector<std::int64_t> eff;
    for (int i = 0; i < kMcsCount; ++i) {
      eff.push_back(std::llround((0.2 + i * (5.3 / 28.0)) * 1e6));
    }
    return McsTable(std::move(eff));
  }();
  return table;
}

McsTable parse_mcs_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ConfigError, "empty MCS table");
  if (line.rfind("mcs,efficiency_bits_per_re", 0) != 0) {
    throw Error(ErrorCode::ConfigError, "MCS table header must be mcs,efficiency_bits_per_re");
  }
  std::vector<std::int64_t> eff;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    int mcs = -1;
    char comma = 0;
    double e = 0;
    if (!(ls >> mcs >> comma >> e) || comma != ',') {
      throw Error(ErrorCode::ConfigError, "MCS table row " + std::to_string(row) + " malformed");
    }
    if (mcs != static_cast<int>(eff.size())) {
      throw Error(ErrorCode::ConfigError, "MCS table rows must be 0..28 in order");
    }
    eff.push_back(std::llround(e * 1e6));
  }
  return McsTable(std::move(eff));
}

McsTable load_mcs_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open MCS table " + path);
  return parse_mcs_table(in);
}

void write_mcs_table(std::ostream& out, const McsTable& table) {
  out << "mcs,efficiency_bits_per_re\n";
  char buf[64];
  for (int m = 0; m < table.size(); ++m) {
    std::snprintf(buf, sizeof buf, "%d,%.6f\n", m, table.efficiency(m));
    out << buf;
  }
}

std::int64_t compute_tbs(const McsTable& table, int mcs, int num_symbols, int num_prbs) {
  if (num_symbols < 1 || num_prbs < 1) {
    throw Error(ErrorCode::ConfigError, "TBS needs at least one symbol and one PRB");
  }
  const std::int64_t res = std::int64_t{num_symbols} * num_prbs * kSubcarriersPerPrb;
  return res * table.micro_efficiency(mcs) / 8'000'000;
}

TransportBlock to_transport_block(const Dci& dci) {
  TransportBlock tb;
  tb.tbs_bytes = dci.tbs_bytes;
  tb.mcs = dci.mcs;
  tb.rbg_bitmap = dci.rbg_bitmap;
  tb.start_symbol = dci.start_symbol;
  tb.num_symbols = dci.num_symbols;
  tb.ue = dci.ue;
  tb.direction = dci.direction;
  tb.harq_process = dci.harq_process;
  return tb;
}

bool tb_error(const ErrorModel& model, const TransportBlock& tb, double sinr_db, RngStream& rng) {
  switch (model.mode) {
    case ErrorModel::Mode::None: return false;
    case ErrorModel::Mode::Bernoulli: return rng.bernoulli(model.p);
    case ErrorModel::Mode::Threshold: return sinr_db < sinr_min_for_mcs(tb.mcs);
  }
  return false;
}

std::vector<PhyEvent> phy_slot_cycle(const FrameStructure& fs, const PhyTimingConfig& timing,
                                     const SlotAllocInfo& alloc) {
  check_slot_alloc(alloc);
  const TimeNs start = slot_start_time(fs, alloc.addr);
  const TimeNs decode = timing.ue_decode_latency.resolve(fs);
  std::vector<PhyEvent> events;
  events.push_back({PhyEvent::Kind::StartSlot, start, -1});
  for (std::size_t i = 0; i < alloc.entries.size(); ++i) {
    const auto& e = alloc.entries[i];
    if (e.kind != AllocKind::Data) continue;
    const TimeNs tti_start = start + symbol_offset(fs, e.dci.start_symbol);
    const TimeNs tti_end = start + symbol_offset(fs, e.dci.end_symbol());
    const int idx = static_cast<int>(i);
    events.push_back({PhyEvent::Kind::StartVarTti, tti_start, idx});
    events.push_back({PhyEvent::Kind::EndVarTti, tti_end, idx});
    events.push_back({PhyEvent::Kind::MacPduIndication, tti_end + decode, idx});
  }
  events.push_back({PhyEvent::Kind::EndSlot, start + fs.slot_duration, -1});
  std::stable_sort(events.begin(), events.end(),
                   [](const PhyEvent& a, const PhyEvent& b) { return a.ts < b.ts; });
  return events;
}

}  // namespace nrsim

#include "nrsim/check.hpp"

#include <map>
#include <set>
#include <tuple>

#include "nrsim/error.hpp"
#include "nrsim/frame.hpp"

namespace nrsim {

namespace {

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return 0;
}

bool hex_intersects(const std::string& a, const std::string& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (nibble(a[i]) & nibble(b[i])) return true;
  }
  return false;
}

struct UeReplay {
  std::int64_t buffer = 0;
  int outstanding = 0;
  enum { Idle, SrSent, Granted } state = Idle;
  std::vector<TimeNs> expected_sr;
};

class Checker {
 public:
  explicit Checker(std::span<const TraceRow> rows) : rows_(rows) {}

  std::vector<Finding> run() {
    for (const auto& r : rows_) {
      if (r.bwp && (r.event == TraceEvent::SLOT_START || r.event == TraceEvent::DCI_DL ||
                    r.event == TraceEvent::DCI_UL)) {
        if (const auto mu = r.extra_int("mu"); mu && *mu >= 0 && *mu <= kMaxNumerology) {
          fs_.emplace(*r.bwp, derive_frame_structure(Numerology(static_cast<int>(*mu)), 100'000'000));
        }
      }
    }
    TimeNs last_ts = 0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      row_ = i + 1;
      const TraceRow& r = rows_[i];
      if (r.ts < last_ts) add("order", "timestamp goes backwards");
      last_ts = r.ts;
      clock(r);
      switch (r.event) {
        case TraceEvent::TX_START: tx_start(r); break;
        case TraceEvent::DCI_DL: dci_dl(r); break;
        case TraceEvent::DCI_UL: dci_ul(r); break;
        case TraceEvent::PKT_ARRIVAL: arrival(r); break;
        case TraceEvent::PKT_DELIVERED: delivered(r); break;
        case TraceEvent::SR: sr(r); break;
        case TraceEvent::BSR: bsr(r); break;
        default: break;
      }
    }
    row_ = 0;
    for (const auto& [key, ue] : ues_) {
      for (TimeNs t : ue.expected_sr) {
        // The PUCCH follows the arrival within one slot of the slowest numerology.
        if (t + kNsPerMs < last_ts) {
          add("sr_necessity", "packet at " + std::to_string(t) + " ns for UE " + std::to_string(key.second) +
                                  " met an empty idle buffer but no SR followed");
        }
      }
    }
    for (const auto& [flow, bytes] : delivered_bytes_) {
      if (bytes > generated_bytes_[flow]) {
        add("conservation", "flow " + std::to_string(flow) + " delivered more bytes than generated");
      }
    }
    return std::move(findings_);
  }

 private:
  void add(std::string rule, std::string msg) { findings_.push_back({std::move(rule), row_, std::move(msg)}); }

  const FrameStructure* frame(const TraceRow& r) const {
    if (!r.bwp) return nullptr;
    const auto it = fs_.find(*r.bwp);
    return it == fs_.end() ? nullptr : &it->second;
  }

  std::optional<std::int64_t> index(const TraceRow& r, const SlotAddress& a) const {
    const FrameStructure* fs = frame(r);
    if (!fs || !is_valid(*fs, a)) return std::nullopt;
    return slot_index(*fs, a);
  }

  void clock(const TraceRow& r) {
    const FrameStructure* fs = frame(r);
    if (!fs || !r.addr) return;
    if (!is_valid(*fs, *r.addr)) {
      add("clock", "slot " + to_string(*r.addr) + " does not exist at mu=" + std::to_string(fs->mu.value()));
      return;
    }
    const TimeNs start = slot_start_time(*fs, *r.addr);
    std::optional<TimeNs> expect;
    switch (r.event) {
      case TraceEvent::SLOT_START:
      case TraceEvent::DCI_DL:
      case TraceEvent::DCI_UL: expect = start; break;
      case TraceEvent::SLOT_END: expect = start + fs->slot_duration; break;
      case TraceEvent::SR: expect = start + symbol_offset(*fs, 13); break;
      case TraceEvent::TX_START:
      case TraceEvent::HARQ_RETX:
        if (r.symbol_start && *r.symbol_start >= 0 && *r.symbol_start <= 14) {
          expect = start + symbol_offset(*fs, *r.symbol_start);
        }
        break;
      case TraceEvent::TX_END:
        if (r.symbol_start && r.num_symbols && *r.symbol_start + *r.num_symbols <= 14) {
          expect = start + symbol_offset(*fs, *r.symbol_start + *r.num_symbols);
        }
        break;
      case TraceEvent::BSR: {
        bool on_grid = false;
        for (int k = 0; k <= 14; ++k) on_grid = on_grid || r.ts == start + symbol_offset(*fs, k);
        if (!on_grid) add("clock", "BSR off the symbol grid");
        return;
      }
      default:
        return;
    }
    if (expect && *expect != r.ts) {
      add("clock", std::string(to_string(r.event)) + " at " + std::to_string(r.ts) + " ns, expected " +
                       std::to_string(*expect));
    }
  }

  void tx_start(const TraceRow& r) {
    if (!r.addr || !r.symbol_start || !r.num_symbols || !r.bwp) return;
    if (*r.symbol_start < 1 || *r.symbol_start + *r.num_symbols > 13 || *r.num_symbols < 1) {
      add("disjointness", "data allocation leaves symbols 1..12");
    }
    const auto key = std::make_tuple(*r.bwp, r.addr->frame, r.addr->subframe, r.addr->slot);
    auto& slot = air_[key];
    for (const TraceRow* other : slot) {
      const bool time = *r.symbol_start < *other->symbol_start + *other->num_symbols &&
                        *other->symbol_start < *r.symbol_start + *r.num_symbols;
      if (time && hex_intersects(r.rbg_hex, other->rbg_hex)) {
        add("disjointness", "UE " + std::to_string(r.ue.value_or(0)) + " overlaps UE " +
                                std::to_string(other->ue.value_or(0)) + " in slot " + to_string(*r.addr));
      }
    }
    slot.push_back(&r);

    if (r.direction == Direction::UL && !r.retx.value_or(false)) {
      const auto idx = index(r, *r.addr);
      if (!idx) return;
      const auto g = std::make_tuple(*r.bwp, r.ue.value_or(0), r.harq.value_or(-1), *idx);
      const auto it = grants_.find(g);
      if (it == grants_.end()) {
        add("timing", "PUSCH of UE " + std::to_string(r.ue.value_or(0)) + " in " + to_string(*r.addr) +
                          " has no UL grant pointing at it");
      } else {
        grants_.erase(it);
      }
    }
  }

  bool decision_distance(const TraceRow& r, std::int64_t& pdcch, std::int64_t& decision, std::int64_t& d) {
    const auto dec_s = r.extra_value("decision");
    const auto d_v = r.extra_int("d");
    if (!r.addr || !dec_s || !d_v) {
      add("timing", "DCI row without decision slot or d");
      return false;
    }
    const auto dec = parse_slot_address(*dec_s);
    const auto pi = index(r, *r.addr);
    const auto di = dec ? index(r, *dec) : std::nullopt;
    if (!pi || !di) return false;
    pdcch = *pi;
    decision = *di;
    d = *d_v;
    if (pdcch - decision != d) {
      add("timing", std::string(to_string(r.event)) + " decided in " + *dec_s + " sits in " + to_string(*r.addr) +
                        ", expected decision + " + std::to_string(d));
    }
    return true;
  }

  void dci_dl(const TraceRow& r) {
    std::int64_t p = 0, dec = 0, d = 0;
    decision_distance(r, p, dec, d);
  }

  void dci_ul(const TraceRow& r) {
    std::int64_t p = 0, dec = 0, d = 0;
    if (!decision_distance(r, p, dec, d)) return;
    const auto pusch_s = r.extra_value("pusch");
    const auto k2 = r.extra_int("k2");
    const auto pusch = pusch_s ? parse_slot_address(*pusch_s) : std::nullopt;
    const auto pi = pusch ? index(r, *pusch) : std::nullopt;
    if (!pi || !k2) {
      add("timing", "DCI_UL without pusch slot or k2");
      return;
    }
    if (*pi - p != *k2) {
      add("timing", "UL grant in " + to_string(*r.addr) + " points at " + *pusch_s + ", expected pdcch + k2=" +
                        std::to_string(*k2));
    }
    const auto [it, fresh] = k2_.emplace(*r.bwp, *k2);
    if (!fresh && it->second != *k2) add("timing", "k2 changes within bandwidth part " + std::to_string(*r.bwp));
    if (!r.retx.value_or(false)) {
      grants_.insert({*r.bwp, r.ue.value_or(0), r.harq.value_or(-1), *pi});
      auto& ue = ues_[{*r.bwp, r.ue.value_or(0)}];
      ++ue.outstanding;
      ue.state = UeReplay::Granted;
    }
  }

  void arrival(const TraceRow& r) {
    const auto pid = r.extra_int("pid");
    const auto size = r.extra_int("size").value_or(0);
    if (pid) {
      if (!arrivals_.emplace(*pid, std::make_pair(r.flow.value_or(0), size)).second) {
        add("conservation", "packet id " + std::to_string(*pid) + " generated twice");
      }
    }
    generated_bytes_[r.flow.value_or(0)] += size;
    if (r.direction != Direction::UL || !r.bwp || !r.ue) return;
    auto& ue = ues_[{*r.bwp, *r.ue}];
    if (ue.buffer == 0 && ue.state == UeReplay::Idle) {
      ue.expected_sr.push_back(r.ts);
      ue.state = UeReplay::SrSent;
    }
    ue.buffer += size;
  }

  void sr(const TraceRow& r) {
    if (!r.bwp || !r.ue) return;
    auto& ue = ues_[{*r.bwp, *r.ue}];
    if (ue.expected_sr.empty()) {
      add("sr_necessity", "SR from UE " + std::to_string(*r.ue) + " without a packet meeting an empty idle buffer");
      return;
    }
    ue.expected_sr.erase(ue.expected_sr.begin());
  }

  void bsr(const TraceRow& r) {
    if (!r.bwp || !r.ue) return;
    auto& ue = ues_[{*r.bwp, *r.ue}];
    const auto occ = r.extra_int("occ");
    const auto data = r.extra_int("data");
    const auto rep = r.extra_int("bsr");
    if (!occ || !data || !rep) {
      add("bsr_honesty", "BSR row without occ/data/bsr");
      return;
    }
    if (*occ != ue.buffer) {
      add("bsr_honesty", "UE " + std::to_string(*r.ue) + " buffer is " + std::to_string(ue.buffer) +
                             " bytes, BSR row claims " + std::to_string(*occ));
    }
    if (*rep != *occ - *data) {
      add("bsr_honesty", "BSR " + std::to_string(*rep) + " != occupancy " + std::to_string(*occ) + " - sent " +
                             std::to_string(*data));
    }
    ue.buffer = *rep;
    ue.outstanding = std::max(ue.outstanding - 1, 0);
    if (ue.buffer == 0 && ue.outstanding == 0) ue.state = UeReplay::Idle;
  }

  void delivered(const TraceRow& r) {
    const auto pid = r.extra_int("pid");
    const auto size = r.extra_int("size").value_or(0);
    delivered_bytes_[r.flow.value_or(0)] += size;
    if (!pid) return;
    const auto it = arrivals_.find(*pid);
    if (it == arrivals_.end()) {
      add("conservation", "packet " + std::to_string(*pid) + " delivered but never generated");
      return;
    }
    if (it->second.first != r.flow.value_or(0) || it->second.second != size) {
      add("conservation", "packet " + std::to_string(*pid) + " changed flow or size in transit");
    }
    if (!delivered_ids_.insert(*pid).second) {
      add("conservation", "packet " + std::to_string(*pid) + " delivered twice");
    }
    if (const auto delay = r.extra_int("delay"); !delay || *delay < 0) {
      add("conservation", "packet " + std::to_string(*pid) + " has a negative or missing delay");
    }
  }

  std::span<const TraceRow> rows_;
  std::size_t row_ = 0;
  std::vector<Finding> findings_;
  std::map<int, FrameStructure> fs_;
  std::map<std::tuple<int, std::int64_t, int, int>, std::vector<const TraceRow*>> air_;
  std::multiset<std::tuple<int, UeId, int, std::int64_t>> grants_;
  std::map<int, std::int64_t> k2_;
  std::map<std::pair<int, UeId>, UeReplay> ues_;
  std::map<std::int64_t, std::pair<std::uint32_t, std::int64_t>> arrivals_;
  std::set<std::int64_t> delivered_ids_;
  std::map<std::uint32_t, std::int64_t> generated_bytes_;
  std::map<std::uint32_t, std::int64_t> delivered_bytes_;
};

}  // namespace

std::vector<Finding> check_trace(std::span<const TraceRow> rows) { return Checker(rows).run(); }

std::vector<Finding> check_trace_file(const std::string& path) {
  const auto rows = read_trace_file(path);
  return check_trace(rows);
}

}  // namespace nrsim

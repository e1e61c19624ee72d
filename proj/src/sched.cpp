#include "nrsim/sched.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nrsim/error.hpp"

namespace nrsim {

std::string_view to_string(AccessMode m) { return m == AccessMode::TDMA ? "TDMA" : "OFDMA"; }

std::string_view to_string(SchedPolicy p) {
  switch (p) {
    case SchedPolicy::RR: return "RR";
    case SchedPolicy::PF: return "PF";
    case SchedPolicy::MR: return "MR";
  }
  return "RR";
}

std::string_view to_string(BeamMode m) { return m == BeamMode::LOAD ? "LOAD" : "RR"; }

double pf_metric(double inst_rate_bps, double avg_rate_bps, double alpha) {
  return std::pow(inst_rate_bps, alpha) / avg_rate_bps;
}

std::map<int, int> distribute_symbols_to_beams(std::span<const BeamLoad> beams, int data_symbols,
                                               BeamMode mode) {
  std::vector<BeamLoad> sorted(beams.begin(), beams.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const BeamLoad& a, const BeamLoad& b) { return a.beam_id < b.beam_id; });
  std::map<int, int> out;
  for (const auto& b : sorted) out[b.beam_id] = 0;
  if (sorted.empty() || data_symbols <= 0) return out;

  if (mode == BeamMode::RR) {
    const int n = static_cast<int>(sorted.size());
    for (int i = 0; i < n; ++i) {
      out[sorted[i].beam_id] = data_symbols / n + (i < data_symbols % n ? 1 : 0);
    }
    return out;
  }

  const std::int64_t total = std::accumulate(
      sorted.begin(), sorted.end(), std::int64_t{0},
      [](std::int64_t acc, const BeamLoad& b) { return acc + std::max<std::int64_t>(b.load_bytes, 0); });
  if (total == 0) return out;
  struct Share {
    int beam;
    std::int64_t remainder;
  };
  std::vector<Share> shares;
  int assigned = 0;
  for (const auto& b : sorted) {
    const std::int64_t load = std::max<std::int64_t>(b.load_bytes, 0);
    const std::int64_t scaled = load * data_symbols;
    out[b.beam_id] = static_cast<int>(scaled / total);
    assigned += out[b.beam_id];
    if (load > 0) shares.push_back({b.beam_id, scaled % total});
  }
  std::stable_sort(shares.begin(), shares.end(),
                   [](const Share& a, const Share& b) { return a.remainder > b.remainder; });
  for (std::size_t i = 0; assigned < data_symbols && i < shares.size(); ++i, ++assigned) {
    ++out[shares[i].beam];
  }
  return out;
}

std::int64_t units_tbs(const ResourceContext& ctx, AccessMode access, int mcs, int units,
                       int span_symbols) {
  if (units <= 0) return 0;
  if (access == AccessMode::TDMA) {
    return compute_tbs(ctx.mcs_table, mcs, units, ctx.fs.prb_count);
  }
  const int prbs = std::min(units * ctx.fs.rbg_size, ctx.fs.prb_count);
  return compute_tbs(ctx.mcs_table, mcs, span_symbols, prbs);
}

int units_for_demand(const ResourceContext& ctx, AccessMode access, int mcs,
                     std::int64_t demand_bytes, int span_symbols, int max_units) {
  for (int u = 1; u <= max_units; ++u) {
    if (units_tbs(ctx, access, mcs, u, span_symbols) >= demand_bytes) return u;
  }
  return -1;
}

UnitAllocation select_units(std::span<const AssignCandidate> candidates, std::span<const int> caps,
                            int units, const PolicyConfig& cfg, std::span<const double> unit_rate_bps) {
  const std::size_t n = candidates.size();
  UnitAllocation out;
  out.units.assign(n, 0);
  const double keep = 1.0 - 1.0 / kPfWindowSlots;
  auto pf_value = [&](std::size_t i) {
    const double potential =
        keep * candidates[i].avg_rate_bps + out.units[i] * unit_rate_bps[i] / kPfWindowSlots;
    return pf_metric(candidates[i].inst_rate_bps, std::max(potential, kPfRateFloorBps), cfg.alpha);
  };
  auto better = [&](std::size_t i, std::size_t best) {
    switch (cfg.policy) {
      case SchedPolicy::RR:
        return out.units[i] < out.units[best];
      case SchedPolicy::MR:
        if (candidates[i].inst_rate_bps != candidates[best].inst_rate_bps) {
          return candidates[i].inst_rate_bps > candidates[best].inst_rate_bps;
        }
        return candidates[i].ue < candidates[best].ue;
      case SchedPolicy::PF: {
        const double mi = pf_value(i);
        const double mb = pf_value(best);
        if (mi != mb) return mi > mb;
        return candidates[i].ue < candidates[best].ue;
      }
    }
    return false;
  };
  for (int u = 0; u < units; ++u) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.units[i] >= caps[i]) continue;
      if (best == n || better(i, best)) best = i;
    }
    if (best == n) break;
    if (out.units[best]++ == 0) out.first_win_order.push_back(best);
  }
  return out;
}

std::vector<Dci> assign_resources(std::span<const AssignCandidate> candidates, Direction dir,
                                  const Region& region, const PolicyConfig& cfg,
                                  const ResourceContext& ctx) {
  std::vector<Dci> dcis;
  if (candidates.empty() || region.num_symbols <= 0) return dcis;
  const AccessMode access = dir == Direction::UL ? AccessMode::TDMA : cfg.access;
  const int span = region.num_symbols;
  const int units = access == AccessMode::TDMA ? span : ctx.fs.rbg_count;
  const std::int64_t overhead = dir == Direction::UL ? kBsrOverheadBytes : 0;

  std::vector<int> caps;
  std::vector<double> unit_rate;
  for (const auto& c : candidates) {
    int cap = 0;
    if (c.demand_bytes > 0 && units_tbs(ctx, access, c.mcs, units, span) > 0) {
      cap = units_for_demand(ctx, access, c.mcs, c.demand_bytes + overhead, span, units);
      if (cap < 0) cap = units;
    }
    caps.push_back(cap);
    unit_rate.push_back(static_cast<double>(units_tbs(ctx, access, c.mcs, 1, span)) * 8.0 *
                        static_cast<double>(kNsPerS) / static_cast<double>(ctx.fs.slot_duration));
  }
  const UnitAllocation alloc = select_units(candidates, caps, units, cfg, unit_rate);

  int offset = 0;
  for (std::size_t idx : alloc.first_win_order) {
    const auto& c = candidates[idx];
    const int got = alloc.units[idx];
    Dci dci;
    dci.ue = c.ue;
    dci.direction = dir;
    dci.mcs = c.mcs;
    if (access == AccessMode::TDMA) {
      dci.start_symbol = region.first_symbol + offset;
      dci.num_symbols = got;
      dci.rbg_bitmap = RbgBitmap::all_ones(ctx.fs.rbg_count);
      dci.tbs_bytes = compute_tbs(ctx.mcs_table, c.mcs, got, ctx.fs.prb_count);
    } else {
      dci.start_symbol = region.first_symbol;
      dci.num_symbols = span;
      dci.rbg_bitmap = RbgBitmap::block(ctx.fs.rbg_count, offset, got);
      int prbs = 0;
      for (int m = offset; m < offset + got; ++m) prbs += prbs_in_rbg(ctx.fs, m);
      dci.tbs_bytes = compute_tbs(ctx.mcs_table, c.mcs, span, prbs);
    }
    offset += got;
    dcis.push_back(std::move(dci));
  }
  return dcis;
}

std::vector<RbgBitmap> build_rbg_bitmap(std::span<const std::vector<int>> assignment, int rbg_count) {
  std::vector<RbgBitmap> out;
  RbgBitmap seen(rbg_count);
  for (const auto& set : assignment) {
    RbgBitmap bm(rbg_count);
    for (int m : set) {
      if (seen.test(m)) {
        throw Error(ErrorCode::OverlapError, "RBG " + std::to_string(m) + " assigned twice");
      }
      seen.set(m);
      bm.set(m);
    }
    out.push_back(std::move(bm));
  }
  return out;
}

SlotGrid::SlotGrid(int rbg_count) : rbg_count_(rbg_count), used_(kSymbolsPerSlot, RbgBitmap(rbg_count)) {}

SlotGrid::SlotGrid(const SlotAllocInfo& alloc, int rbg_count) : SlotGrid(rbg_count) {
  for (const auto& e : alloc.entries) occupy(e.dci);
}

bool SlotGrid::is_free(int start_symbol, int num_symbols, const RbgBitmap& bm) const {
  if (start_symbol < kFirstDataSymbol || start_symbol + num_symbols > kLastDataSymbol + 1) return false;
  for (int s = start_symbol; s < start_symbol + num_symbols; ++s) {
    if (used_[s].intersects(bm)) return false;
  }
  return true;
}

void SlotGrid::occupy(const Dci& dci) {
  for (int s = dci.start_symbol; s < dci.end_symbol(); ++s) {
    for (int m = 0; m < rbg_count_; ++m) {
      if (dci.rbg_bitmap.test(m)) used_[s].set(m);
    }
  }
}

bool SlotGrid::symbol_free(int symbol) const { return used_[symbol].none(); }

std::optional<Region> SlotGrid::free_run(Direction dir) const {
  if (dir == Direction::DL) {
    int s = kFirstDataSymbol;
    while (s <= kLastDataSymbol && !symbol_free(s)) ++s;
    if (s > kLastDataSymbol) return std::nullopt;
    int e = s;
    while (e + 1 <= kLastDataSymbol && symbol_free(e + 1)) ++e;
    return Region{s, e - s + 1};
  }
  int e = kLastDataSymbol;
  while (e >= kFirstDataSymbol && !symbol_free(e)) --e;
  if (e < kFirstDataSymbol) return std::nullopt;
  int s = e;
  while (s - 1 >= kFirstDataSymbol && symbol_free(s - 1)) --s;
  return Region{s, e - s + 1};
}

RetxOutcome harq_schedule_retx(std::span<const Dci> pending, SlotAllocInfo slot, int rbg_count) {
  RetxOutcome out;
  SlotGrid grid(slot, rbg_count);
  for (const Dci& orig : pending) {
    const int n = orig.num_symbols;
    const int k = orig.rbg_bitmap.count();
    bool placed = false;
    const bool upward = orig.direction == Direction::DL;
    const int first = kFirstDataSymbol;
    const int last = kLastDataSymbol + 1 - n;
    for (int i = 0; !placed && i <= last - first; ++i) {
      const int s = upward ? first + i : last - i;
      for (int f = 0; f + k <= rbg_count; ++f) {
        RbgBitmap bm = RbgBitmap::block(rbg_count, f, k);
        if (!grid.is_free(s, n, bm)) continue;
        Dci d = orig;
        d.start_symbol = s;
        d.rbg_bitmap = std::move(bm);
        d.is_retx = true;
        d.target_slot = slot.addr;
        grid.occupy(d);
        slot.entries.push_back({AllocKind::Data, d});
        out.placed.push_back(std::move(d));
        placed = true;
        break;
      }
    }
    if (!placed) out.deferred.push_back(orig);
  }
  out.slot = std::move(slot);
  return out;
}

std::vector<Dci> order_retx_round_robin(std::span<const Dci> pending, int cursor, int harq_processes) {
  std::vector<std::size_t> idx(pending.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rank = [&](std::size_t i) {
    return ((pending[i].harq_process - cursor) % harq_processes + harq_processes) % harq_processes;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rank(a) < rank(b); });
  std::vector<Dci> out;
  out.reserve(pending.size());
  for (auto i : idx) out.push_back(pending[i]);
  return out;
}

// ---------------------------------------------------------------------------

Scheduler::Scheduler(const FrameStructure& fs, const PhyTimingConfig& timing, const PolicyConfig& policy,
                     const McsTable& table, int harq_processes)
    : fs_(fs), timing_(timing), policy_(policy), table_(table), harq_processes_(harq_processes) {}

void Scheduler::add_ue(UeId ue, int beam_id, int cqi, int mcs, std::optional<int> cqi_ul,
                       std::optional<int> mcs_ul) {
  SchedUeInfo info;
  info.ue = ue;
  info.beam_id = beam_id;
  info.cqi = cqi;
  info.mcs = mcs;
  info.cqi_ul = cqi_ul.value_or(cqi);
  info.mcs_ul = mcs_ul.value_or(mcs);
  info.harq_dl.resize(static_cast<std::size_t>(harq_processes_));
  info.harq_ul.resize(static_cast<std::size_t>(harq_processes_));
  ues_[ue] = std::move(info);
}

SchedUeInfo& Scheduler::ue_info(UeId ue) {
  auto it = ues_.find(ue);
  if (it == ues_.end()) throw Error(ErrorCode::InvariantError, "unknown UE " + std::to_string(ue));
  return it->second;
}

const SchedUeInfo& Scheduler::ue_info(UeId ue) const {
  auto it = ues_.find(ue);
  if (it == ues_.end()) throw Error(ErrorCode::InvariantError, "unknown UE " + std::to_string(ue));
  return it->second;
}

void Scheduler::set_dl_buffer(UeId ue, std::int64_t bytes) { ue_info(ue).buffered_bytes_dl = bytes; }

void Scheduler::on_sr(UeId ue, const SlotAddress& sr_slot) {
  ue_info(ue);
  pending_srs_.push_back({ue, sr_slot});
}

void Scheduler::on_bsr(UeId ue, std::int64_t reported_bytes) {
  ue_info(ue).buffered_bytes_ul = std::max<std::int64_t>(reported_bytes, 0);
}

void Scheduler::on_ul_tb_lost(UeId ue) {
  auto& info = ue_info(ue);
  info.buffered_bytes_ul = std::max<std::int64_t>(info.buffered_bytes_ul, 1);
}

HarqVerdict Scheduler::on_harq_feedback(const Dci& dci, bool ack) {
  auto& info = ue_info(dci.ue);
  auto& procs = dci.direction == Direction::DL ? info.harq_dl : info.harq_ul;
  auto& proc = procs.at(static_cast<std::size_t>(dci.harq_process));
  if (ack) {
    proc = {};
    return HarqVerdict::Ack;
  }
  if (proc.transmissions >= kMaxHarqTransmissions) {
    proc = {};
    if (dci.direction == Direction::UL) on_ul_tb_lost(dci.ue);
    return HarqVerdict::Drop;
  }
  (dci.direction == Direction::DL ? retx_dl_ : retx_ul_).push_back(dci);
  return HarqVerdict::Retransmit;
}

AirSlot& Scheduler::air_slot(const SlotAddress& addr) {
  const auto key = slot_index(fs_, addr);
  auto it = air_.find(key);
  if (it == air_.end()) {
    it = air_.emplace(key, AirSlot{make_ctrl_only_slot(addr, fs_.rbg_count), {}}).first;
  }
  return it->second;
}

AirSlot Scheduler::take_air_slot(const SlotAddress& addr) {
  auto it = air_.find(slot_index(fs_, addr));
  if (it == air_.end()) return AirSlot{make_ctrl_only_slot(addr, fs_.rbg_count), {}};
  AirSlot out = std::move(it->second);
  air_.erase(it);
  return out;
}

double Scheduler::inst_rate(int mcs) const {
  return static_cast<double>(compute_tbs(table_, mcs, kDataSymbols, fs_.prb_count)) * 8.0 *
         static_cast<double>(kNsPerS) / static_cast<double>(fs_.slot_duration);
}

std::optional<int> Scheduler::claim_harq(SchedUeInfo& info, Direction dir) {
  auto& procs = dir == Direction::DL ? info.harq_dl : info.harq_ul;
  for (std::size_t p = 0; p < procs.size(); ++p) {
    if (!procs[p].busy) {
      procs[p].busy = true;
      procs[p].transmissions = 1;
      return static_cast<int>(p);
    }
  }
  return std::nullopt;
}

void Scheduler::finish_dci(Dci& dci, const SlotAddress& now, const SlotAddress& target) const {
  dci.decision_slot = now;
  dci.target_slot = target;
  dci.k2_slots = dci.direction == Direction::UL ? timing_.k2 : 0;
}

void Scheduler::place_retx(std::vector<Dci>& queue, int& cursor, const SlotAddress& now, AirSlot& slot,
                           std::vector<Dci>& produced, std::map<UeId, std::int64_t>& served_bits) {
  if (queue.empty()) return;
  std::vector<Dci> ordered = order_retx_round_robin(queue, cursor, harq_processes_);
  for (auto& d : ordered) finish_dci(d, now, slot.alloc.addr);
  RetxOutcome res = harq_schedule_retx(ordered, std::move(slot.alloc), fs_.rbg_count);
  slot.alloc = std::move(res.slot);
  for (const auto& d : res.placed) {
    auto& info = ue_info(d.ue);
    auto& procs = d.direction == Direction::DL ? info.harq_dl : info.harq_ul;
    ++procs.at(static_cast<std::size_t>(d.harq_process)).transmissions;
    served_bits[d.ue] += d.tbs_bytes * 8;
    cursor = (d.harq_process + 1) % harq_processes_;
    produced.push_back(d);
  }
  queue = std::move(res.deferred);
}

void Scheduler::schedule_ul(const SlotAddress& now, const SlotAddress& target, SlotDecision& out,
                            std::map<UeId, std::int64_t>& served_bits) {
  AirSlot& slot = air_slot(target);
  const ResourceContext ctx{fs_, table_};
  std::vector<Dci> produced;

  place_retx(retx_ul_, retx_cursor_ul_, now, slot, produced, served_bits);

  // Blind grants for scheduling requests whose control latency has elapsed.
  std::vector<UeId> granted;
  std::stable_sort(pending_srs_.begin(), pending_srs_.end(), [&](const PendingSr& a, const PendingSr& b) {
    return std::pair(slot_index(fs_, a.slot), a.ue) < std::pair(slot_index(fs_, b.slot), b.ue);
  });
  std::vector<PendingSr> still_pending;
  const std::int64_t decision_reach = slot_index(fs_, now) + timing_.l1l2_data_latency;
  for (const auto& sr : pending_srs_) {
    const std::int64_t received = slot_index(fs_, sr.slot) + 1;
    const bool eligible = received <= slot_index(fs_, now) &&
                          received + timing_.l1l2_ctrl_latency <= decision_reach;
    auto& info = ue_info(sr.ue);
    const int sym = units_for_demand(ctx, AccessMode::TDMA, info.mcs_ul, kBsrOverheadBytes, 0, kDataSymbols);
    SlotGrid grid(slot.alloc, fs_.rbg_count);
    const auto region = grid.free_run(Direction::UL);
    if (!eligible || sym < 0 || !region || region->num_symbols < sym) {
      still_pending.push_back(sr);
      continue;
    }
    const auto pid = claim_harq(info, Direction::UL);
    if (!pid) {
      still_pending.push_back(sr);
      continue;
    }
    Dci dci;
    dci.ue = sr.ue;
    dci.direction = Direction::UL;
    dci.start_symbol = region->first_symbol + region->num_symbols - sym;
    dci.num_symbols = sym;
    dci.rbg_bitmap = RbgBitmap::all_ones(fs_.rbg_count);
    dci.mcs = info.mcs_ul;
    dci.tbs_bytes = compute_tbs(table_, info.mcs_ul, sym, fs_.prb_count);
    dci.harq_process = *pid;
    finish_dci(dci, now, target);
    slot.alloc.entries.push_back({AllocKind::Data, dci});
    served_bits[sr.ue] += dci.tbs_bytes * 8;
    info.rr_units_ul += sym;
    granted.push_back(sr.ue);
    produced.push_back(std::move(dci));
  }
  pending_srs_ = std::move(still_pending);

  // New data against reported buffer status.
  std::vector<SchedUeInfo*> eligible;
  for (auto& [id, info] : ues_) {
    if (info.buffered_bytes_ul <= 0) continue;
    if (std::find(granted.begin(), granted.end(), id) != granted.end()) continue;
    if (std::none_of(info.harq_ul.begin(), info.harq_ul.end(), [](const HarqProcessState& p) { return !p.busy; })) {
      continue;
    }
    eligible.push_back(&info);
  }
  const auto region = SlotGrid(slot.alloc, fs_.rbg_count).free_run(Direction::UL);
  if (!eligible.empty() && region) {
    std::stable_sort(eligible.begin(), eligible.end(), [](const SchedUeInfo* a, const SchedUeInfo* b) {
      return std::pair(a->rr_units_ul, a->ue) < std::pair(b->rr_units_ul, b->ue);
    });
    std::vector<AssignCandidate> cands;
    for (const auto* info : eligible) {
      cands.push_back({info->ue, info->buffered_bytes_ul, info->mcs_ul, inst_rate(info->mcs_ul),
                       info->avg_rate_ul_bps});
    }
    auto dcis = assign_resources(cands, Direction::UL, *region, policy_, ctx);
    int used = 0;
    for (const auto& d : dcis) used += d.num_symbols;
    const int shift = region->num_symbols - used;
    for (auto& d : dcis) {
      auto& info = ue_info(d.ue);
      d.start_symbol += shift;
      d.harq_process = *claim_harq(info, Direction::UL);
      finish_dci(d, now, target);
      info.buffered_bytes_ul =
          std::max<std::int64_t>(0, info.buffered_bytes_ul - (d.tbs_bytes - kBsrOverheadBytes));
      info.rr_units_ul += d.num_symbols;
      served_bits[d.ue] += d.tbs_bytes * 8;
      slot.alloc.entries.push_back({AllocKind::Data, d});
      produced.push_back(std::move(d));
    }
  }

  AirSlot& carrier = air_slot(out.dl_target);
  for (const auto& d : produced) carrier.ul_grants.push_back(d);
  out.ul_dcis = std::move(produced);
}

void Scheduler::schedule_dl(const SlotAddress& now, const SlotAddress& target, SlotDecision& out,
                            std::map<UeId, std::int64_t>& served_bits) {
  AirSlot& slot = air_slot(target);
  const ResourceContext ctx{fs_, table_};
  std::vector<Dci> produced;

  place_retx(retx_dl_, retx_cursor_dl_, now, slot, produced, served_bits);

  std::vector<SchedUeInfo*> eligible;
  for (auto& [id, info] : ues_) {
    if (info.buffered_bytes_dl <= 0) continue;
    if (std::none_of(info.harq_dl.begin(), info.harq_dl.end(), [](const HarqProcessState& p) { return !p.busy; })) {
      continue;
    }
    eligible.push_back(&info);
  }
  const auto region = SlotGrid(slot.alloc, fs_.rbg_count).free_run(Direction::DL);
  if (!eligible.empty() && region) {
    std::stable_sort(eligible.begin(), eligible.end(), [](const SchedUeInfo* a, const SchedUeInfo* b) {
      return std::pair(a->rr_units_dl, a->ue) < std::pair(b->rr_units_dl, b->ue);
    });
    auto candidate = [&](const SchedUeInfo* info) {
      return AssignCandidate{info->ue, info->buffered_bytes_dl, info->mcs, inst_rate(info->mcs),
                             info->avg_rate_dl_bps};
    };
    std::vector<Dci> dcis;
    if (policy_.access == AccessMode::TDMA) {
      std::vector<AssignCandidate> cands;
      for (const auto* info : eligible) cands.push_back(candidate(info));
      dcis = assign_resources(cands, Direction::DL, *region, policy_, ctx);
    } else {
      std::map<int, std::vector<AssignCandidate>> per_beam;
      std::map<int, std::int64_t> load;
      for (const auto* info : eligible) {
        per_beam[info->beam_id].push_back(candidate(info));
        load[info->beam_id] += info->buffered_bytes_dl;
      }
      std::vector<BeamLoad> beams;
      for (const auto& [beam, bytes] : load) beams.push_back({beam, bytes});
      const auto symbols = distribute_symbols_to_beams(beams, region->num_symbols, policy_.beam_mode);
      int start = region->first_symbol;
      for (const auto& [beam, count] : symbols) {
        if (count == 0) continue;
        auto part = assign_resources(per_beam[beam], Direction::DL, Region{start, count}, policy_, ctx);
        for (auto& d : part) dcis.push_back(std::move(d));
        start += count;
      }
    }
    for (auto& d : dcis) {
      auto& info = ue_info(d.ue);
      d.harq_process = *claim_harq(info, Direction::DL);
      finish_dci(d, now, target);
      info.buffered_bytes_dl = std::max<std::int64_t>(0, info.buffered_bytes_dl - d.tbs_bytes);
      info.rr_units_dl += policy_.access == AccessMode::TDMA ? d.num_symbols : d.rbg_bitmap.count();
      served_bits[d.ue] += d.tbs_bytes * 8;
      slot.alloc.entries.push_back({AllocKind::Data, d});
      produced.push_back(std::move(d));
    }
  }
  out.dl_dcis = std::move(produced);
}

SlotDecision Scheduler::schedule_slot(const SlotAddress& now) {
  SlotDecision out;
  out.dl_target = advance_slots(fs_, now, timing_.l1l2_data_latency);
  out.ul_target = advance_slots(fs_, now, timing_.l1l2_data_latency + timing_.k2);
  std::map<UeId, std::int64_t> served_ul;
  std::map<UeId, std::int64_t> served_dl;
  schedule_ul(now, out.ul_target, out, served_ul);
  schedule_dl(now, out.dl_target, out, served_dl);

  const double keep = 1.0 - 1.0 / kPfWindowSlots;
  const double slot_s = static_cast<double>(fs_.slot_duration) / static_cast<double>(kNsPerS);
  for (auto& [id, info] : ues_) {
    const double ul_rate = static_cast<double>(served_ul[id]) / slot_s;
    const double dl_rate = static_cast<double>(served_dl[id]) / slot_s;
    info.avg_rate_ul_bps = std::max(kPfRateFloorBps, keep * info.avg_rate_ul_bps + ul_rate / kPfWindowSlots);
    info.avg_rate_dl_bps = std::max(kPfRateFloorBps, keep * info.avg_rate_dl_bps + dl_rate / kPfWindowSlots);
  }

  out.dl = air_slot(out.dl_target).alloc;
  out.ul = air_slot(out.ul_target).alloc;
  check_slot_alloc(out.dl);
  check_slot_alloc(out.ul);
  return out;
}

}  // namespace nrsim

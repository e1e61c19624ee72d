#include "nrsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <ostream>
#include <tuple>

#include "nrsim/error.hpp"
#include "nrsim/mac_ul.hpp"
#include "nrsim/rng.hpp"

namespace nrsim {

void EventQueue::schedule(TimeNs ts, Action action) {
  if (ts < now_) {
    throw Error(ErrorCode::InvariantError,
                "event scheduled at " + std::to_string(ts) + " before now " + std::to_string(now_));
  }
  heap_.push({ts, seq_++, std::move(action)});
}

void EventQueue::run_next() {
  Event ev = heap_.top();
  heap_.pop();
  now_ = ev.ts;
  ++processed_;
  ev.action();
}

std::vector<TimeNs> cbr_generate(const FlowSpec& spec, TimeNs horizon) {
  std::vector<TimeNs> out;
  const TimeNs end = std::min(spec.stop.value_or(horizon), horizon);
  const Int128 bits_ns = static_cast<Int128>(spec.size_bytes) * 8 * kNsPerS;
  for (std::int64_t k = 0;; ++k) {
    const Int128 num = bits_ns * k;
    const Int128 offset = (2 * num + spec.rate_bps) / (2 * static_cast<Int128>(spec.rate_bps));
    const TimeNs t = spec.start + static_cast<TimeNs>(offset);
    if (t >= end) break;
    out.push_back(t);
  }
  return out;
}

std::vector<TimeNs> generate_arrivals(const FlowSpec& spec, TimeNs horizon) {
  if (spec.generator == GeneratorKind::CBR) return cbr_generate(spec, horizon);
  std::vector<TimeNs> out;
  const TimeNs end = std::min(spec.stop.value_or(horizon), horizon);
  for (TimeNs cycle = spec.start; cycle < end; cycle += spec.on + spec.off) {
    FlowSpec burst = spec;
    burst.generator = GeneratorKind::CBR;
    burst.start = cycle;
    burst.stop = std::min(cycle + spec.on, end);
    const auto part = cbr_generate(burst, horizon);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

TimeNs nearest_rank(std::span<const TimeNs> sorted, double q) {
  if (sorted.empty()) return 0;
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size()) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

double geo_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += std::log(v);
  return std::exp(acc / static_cast<double>(values.size()));
}

double FlowStats::delay_mean_ns() const {
  if (delays.empty()) return 0.0;
  long double sum = 0;
  for (auto d : delays) sum += d;
  return static_cast<double>(sum / delays.size());
}

TimeNs FlowStats::delay_p80_ns() const {
  std::vector<TimeNs> sorted = delays;
  std::sort(sorted.begin(), sorted.end());
  return nearest_rank(sorted, 0.8);
}

TimeNs FlowStats::delay_min_ns() const {
  return delays.empty() ? 0 : *std::min_element(delays.begin(), delays.end());
}

TimeNs FlowStats::delay_max_ns() const {
  return delays.empty() ? 0 : *std::max_element(delays.begin(), delays.end());
}

double FlowStats::goodput_bps() const {
  if (active_duration <= 0) return 0.0;
  return static_cast<double>(delivered_bytes) * 8.0 * static_cast<double>(kNsPerS) /
         static_cast<double>(active_duration);
}

const FlowStats& RunResult::flow(std::uint32_t id) const {
  for (const auto& f : flows) {
    if (f.flow_id == id) return f;
  }
  throw Error(ErrorCode::ConfigError, "no flow " + std::to_string(id));
}

const ClassStats* RunResult::class_stats(const std::string& qos) const {
  for (const auto& c : classes) {
    if (c.qos == qos) return &c;
  }
  return nullptr;
}

void aggregate_classes(RunResult& result, const std::vector<QosClass>& classes) {
  result.classes.clear();
  for (const auto& c : classes) {
    ClassStats cs;
    cs.qos = c.id;
    std::vector<double> delay;
    std::vector<double> goodput;
    for (const auto& f : result.flows) {
      if (f.qos != c.id) continue;
      ++cs.flows;
      if (f.empty()) {
        cs.empty_flows.push_back(f.flow_id);
        continue;
      }
      delay.push_back(std::max(f.delay_mean_ns(), 1.0));
      goodput.push_back(std::max(f.goodput_bps(), 1e-9));
    }
    cs.delay_geo_mean_ns = geo_mean(delay);
    cs.goodput_geo_mean_bps = geo_mean(goodput);
    result.classes.push_back(std::move(cs));
  }
}

namespace {

class StatsCollector {
 public:
  explicit StatsCollector(const Scenario& s) {
    for (const auto& f : s.flows) {
      FlowStats st;
      st.flow_id = f.id;
      st.qos = f.qos;
      st.direction = f.direction;
      st.ue = f.ue;
      const TimeNs end = std::min(f.stop.value_or(s.stop), s.stop);
      st.active_duration = std::max<TimeNs>(end - f.start, 0);
      index_[f.id] = result_.flows.size();
      result_.flows.push_back(std::move(st));
    }
  }

  void observe(const TraceRow& r) {
    switch (r.event) {
      case TraceEvent::PKT_ARRIVAL:
        if (auto* f = find(r.flow)) {
          ++f->generated_packets;
          f->generated_bytes += r.extra_int("size").value_or(0);
        }
        break;
      case TraceEvent::PKT_DELIVERED:
        if (auto* f = find(r.flow)) {
          ++f->delivered_packets;
          f->delivered_bytes += r.extra_int("size").value_or(0);
          f->delays.push_back(r.extra_int("delay").value_or(0));
        }
        break;
      case TraceEvent::SR:
        if (r.ue) ++result_.sr_per_ue[*r.ue];
        if (auto* f = find(r.flow)) ++f->sr_count;
        break;
      default:
        break;
    }
  }

  RunResult& result() { return result_; }
  FlowStats* find(std::optional<std::uint32_t> id) {
    if (!id) return nullptr;
    const auto it = index_.find(*id);
    return it == index_.end() ? nullptr : &result_.flows[it->second];
  }

 private:
  RunResult result_;
  std::map<std::uint32_t, std::size_t> index_;
};

struct PacketRecord {
  std::uint32_t flow = 0;
  UeId ue = 0;
  Direction direction = Direction::UL;
  int bwp = 0;
  std::int64_t size = 0;
  TimeNs generated = 0;
  std::int64_t rlc_remaining = 0;
  std::int64_t received = 0;
  bool delivered = false;
  bool dropped = false;
};

struct TbContent {
  std::vector<RlcSegment> segments;
  std::optional<Bsr> bsr;
};

using TbKey = std::tuple<UeId, int, int>;

struct BwpUnit {
  BwpConfig cfg;
  FrameStructure fs;
  Scheduler sched;
  std::map<UeId, RlcBuffer> dl_rlc;
  std::map<UeId, UeUlMac> ul_mac;
  std::map<UeId, LinkState> dl_link;
  std::map<UeId, LinkState> ul_link;
  std::map<TbKey, TbContent> tb_store;
};

class CoreLink {
 public:
  explicit CoreLink(const CoreLinkConfig& cfg) : cfg_(cfg) {}

  TimeNs transit(TimeNs now, std::int64_t bytes) {
    const Int128 bits_ns = static_cast<Int128>(bytes) * 8 * kNsPerS;
    const auto serialize = static_cast<TimeNs>((bits_ns + cfg_.capacity_bps - 1) / cfg_.capacity_bps);
    free_at_ = std::max(now, free_at_) + serialize;
    return free_at_ + cfg_.latency;
  }

 private:
  CoreLinkConfig cfg_;
  TimeNs free_at_ = 0;
};

std::string dci_extra_slot(const SlotAddress& a) { return to_string(a); }

class Simulation {
 public:
  Simulation(const Scenario& s, const std::function<void(const TraceRow&)>* sink)
      : s_(s), sink_(sink), stats_(s), core_ul_(s.core), core_dl_(s.core) {
    for (const auto& part : s.deployment.parts) {
      const auto fs = derive_frame_structure(part.mu, part.bandwidth_hz);
      units_.push_back(std::make_unique<BwpUnit>(
          BwpUnit{part, fs, Scheduler(fs, part.timing, part.policy, s.mcs_table), {}, {}, {}, {}, {}}));
    }
    for (const auto& ue : s.ues) {
      const double d = ue_distance(s, ue);
      stats_.result().distance_m[ue.id] = d;
      for (auto& u : units_) {
        const auto dl = make_link_state(u->cfg.tx_power_dbm, d, s.channel);
        const auto ul = make_link_state(s.channel.ue_tx_power_dbm, d, s.channel);
        blind_grant_symbols(u->fs, s.mcs_table, ul.mcs);
        u->dl_link[ue.id] = dl;
        u->ul_link[ue.id] = ul;
        u->dl_rlc[ue.id];
        u->ul_mac.emplace(ue.id, UeUlMac(ue.id));
        u->sched.add_ue(ue.id, ue.beam, dl.cqi, dl.mcs, ul.cqi, ul.mcs);
      }
    }
  }

  RunResult run() {
    for (std::size_t b = 0; b < units_.size(); ++b) {
      q_.schedule(0, [this, b] { slot_start(b, SlotAddress{}); });
    }
    for (std::size_t i = 0; i < s_.flows.size(); ++i) {
      arrivals_.push_back(generate_arrivals(s_.flows[i], s_.stop));
      if (!arrivals_[i].empty()) q_.schedule(arrivals_[i][0], [this, i] { arrival(i, 0); });
    }
    while (!q_.empty() && q_.next_ts() <= s_.stop) q_.run_next();
    return finish();
  }

 private:
  void emit(TraceRow& row) {
    row.ts = q_.now();
    stats_.observe(row);
    if (sink_) {
      (*sink_)(row);
      ++rows_;
    }
  }

  bool log_slot(bool active) const {
    if (!sink_) return false;
    return s_.trace_slots == TraceSlots::All || (s_.trace_slots == TraceSlots::Active && active);
  }

  TraceRow base_row(TraceEvent ev, std::size_t b) const {
    TraceRow r;
    r.event = ev;
    r.bwp = units_[b]->cfg.bwp_id;
    return r;
  }

  std::size_t unit_index(int bwp_id) const {
    for (std::size_t i = 0; i < units_.size(); ++i) {
      if (units_[i]->cfg.bwp_id == bwp_id) return i;
    }
    throw Error(ErrorCode::InvariantError, "flow routed to unknown bwp " + std::to_string(bwp_id));
  }

  // ---- traffic

  void arrival(std::size_t fi, std::size_t k) {
    const FlowSpec& f = s_.flows[fi];
    if (k + 1 < arrivals_[fi].size()) q_.schedule(arrivals_[fi][k + 1], [this, fi, k] { arrival(fi, k + 1); });
    const std::size_t b = unit_index(route(s_.deployment, f.qos));
    BwpUnit& u = *units_[b];
    const PacketId pid = packets_.size();
    packets_.push_back({f.id, f.ue, f.direction, u.cfg.bwp_id, f.size_bytes, q_.now(), 0, 0, false, false});

    TraceRow row = base_row(TraceEvent::PKT_ARRIVAL, b);
    row.ue = f.ue;
    row.flow = f.id;
    row.direction = f.direction;
    row.add_extra("size", f.size_bytes);
    row.add_extra("pid", static_cast<std::int64_t>(pid));
    emit(row);

    const RlcPacket pkt{pid, f.id, f.size_bytes, q_.now()};
    if (f.direction == Direction::UL) {
      packets_[pid].rlc_remaining = f.size_bytes;
      if (const auto sr = u.ul_mac.at(f.ue).on_ul_data_arrival(u.fs, pkt)) {
        const UeId ue = f.ue;
        const std::uint32_t flow = f.id;
        const SlotAddress slot = sr->slot;
        q_.schedule(sr->ts, [this, b, ue, flow, slot] { send_sr(b, ue, flow, slot); });
      }
    } else {
      const TimeNs at_gnb = core_dl_.transit(q_.now(), f.size_bytes);
      q_.schedule(at_gnb, [this, b, pkt] {
        packets_[pkt.id].rlc_remaining = pkt.size_bytes;
        units_[b]->dl_rlc.at(packets_[pkt.id].ue).push(pkt);
      });
    }
  }

  void send_sr(std::size_t b, UeId ue, std::uint32_t flow, const SlotAddress& slot) {
    TraceRow row = base_row(TraceEvent::SR, b);
    row.ue = ue;
    row.flow = flow;
    row.addr = slot;
    row.symbol_start = kUlCtrlSymbol;
    row.num_symbols = 1;
    row.direction = Direction::UL;
    emit(row);
    units_[b]->sched.on_sr(ue, slot);
  }

  // ---- slots

  void slot_start(std::size_t b, const SlotAddress& addr) {
    BwpUnit& u = *units_[b];
    for (const auto& [ue, buf] : u.dl_rlc) u.sched.set_dl_buffer(ue, buf.bytes());
    const SlotDecision dec = u.sched.schedule_slot(addr);
    for (const Dci& d : dec.dl_dcis) {
      if (d.is_retx) continue;
      TbContent content;
      content.segments = u.dl_rlc.at(d.ue).dequeue(d.tbs_bytes);
      for (const auto& seg : content.segments) packets_[seg.packet].rlc_remaining -= seg.bytes;
      store(u, d, std::move(content));
    }

    AirSlot air = u.sched.take_air_slot(addr);
    const bool active = air.alloc.data_count() > 0 || !air.ul_grants.empty();
    if (log_slot(active)) {
      TraceRow row = base_row(TraceEvent::SLOT_START, b);
      row.addr = addr;
      row.add_extra("mu", u.fs.mu.value());
      row.add_extra("data", static_cast<std::int64_t>(air.alloc.data_count()));
      emit(row);
    }
    const int d = u.cfg.timing.l1l2_data_latency;
    for (const auto& e : air.alloc.entries) {
      if (e.kind != AllocKind::Data || e.dci.direction != Direction::DL) continue;
      TraceRow row = base_row(TraceEvent::DCI_DL, b);
      row.addr = addr;
      set_dci_fields(row, e.dci);
      row.add_extra("mu", u.fs.mu.value());
      row.add_extra("decision", dci_extra_slot(e.dci.decision_slot));
      row.add_extra("d", d);
      emit(row);
    }
    for (const auto& g : air.ul_grants) {
      TraceRow row = base_row(TraceEvent::DCI_UL, b);
      row.addr = addr;
      set_dci_fields(row, g);
      row.add_extra("mu", u.fs.mu.value());
      row.add_extra("decision", dci_extra_slot(g.decision_slot));
      row.add_extra("pusch", dci_extra_slot(g.target_slot));
      row.add_extra("k2", g.k2_slots);
      row.add_extra("d", d);
      emit(row);
      if (!g.is_retx) u.ul_mac.at(g.ue).on_grant_received();
    }

    for (const auto& ev : phy_slot_cycle(u.fs, u.cfg.timing, air.alloc)) {
      switch (ev.kind) {
        case PhyEvent::Kind::StartSlot:
          break;
        case PhyEvent::Kind::StartVarTti: {
          const Dci dci = air.alloc.entries[static_cast<std::size_t>(ev.entry)].dci;
          q_.schedule(ev.ts, [this, b, dci] { tx_start(b, dci); });
          break;
        }
        case PhyEvent::Kind::EndVarTti: {
          const Dci dci = air.alloc.entries[static_cast<std::size_t>(ev.entry)].dci;
          q_.schedule(ev.ts, [this, b, dci] { tx_end(b, dci); });
          break;
        }
        case PhyEvent::Kind::MacPduIndication: {
          const Dci dci = air.alloc.entries[static_cast<std::size_t>(ev.entry)].dci;
          q_.schedule(ev.ts, [this, b, dci] { rx(b, dci); });
          break;
        }
        case PhyEvent::Kind::EndSlot: {
          const SlotAddress next = next_slot(u.fs, addr);
          q_.schedule(ev.ts, [this, b, addr, active] {
            if (log_slot(active)) {
              TraceRow row = base_row(TraceEvent::SLOT_END, b);
              row.addr = addr;
              emit(row);
            }
          });
          if (ev.ts <= s_.stop) q_.schedule(ev.ts, [this, b, next] { slot_start(b, next); });
          break;
        }
      }
    }
  }

  static TbKey key(const Dci& d) { return {d.ue, static_cast<int>(d.direction), d.harq_process}; }

  void store(BwpUnit& u, const Dci& d, TbContent content) {
    if (!u.tb_store.emplace(key(d), std::move(content)).second) {
      throw Error(ErrorCode::InvariantError, "HARQ process " + std::to_string(d.harq_process) + " of UE " +
                                                 std::to_string(d.ue) + " reused while busy");
    }
  }

  TraceRow tti_row(TraceEvent ev, std::size_t b, const Dci& dci) const {
    TraceRow row = base_row(ev, b);
    row.addr = dci.target_slot;
    set_dci_fields(row, dci);
    return row;
  }

  void tx_start(std::size_t b, const Dci& dci) {
    BwpUnit& u = *units_[b];
    if (dci.direction == Direction::UL && !dci.is_retx) {
      TbContent content;
      try {
        PuschContent p = u.ul_mac.at(dci.ue).on_ul_grant(dci);
        for (const auto& seg : p.segments) packets_[seg.packet].rlc_remaining -= seg.bytes;
        TraceRow bsr = base_row(TraceEvent::BSR, b);
        bsr.ue = dci.ue;
        bsr.addr = dci.target_slot;
        bsr.direction = Direction::UL;
        bsr.harq = dci.harq_process;
        bsr.add_extra("occ", p.occupancy_before);
        bsr.add_extra("data", p.data_bytes);
        bsr.add_extra("bsr", p.bsr.reported_bytes);
        emit(bsr);
        content.segments = std::move(p.segments);
        content.bsr = p.bsr;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::GrantTooSmall) throw;
      }
      store(u, dci, std::move(content));
    }
    TraceRow row = tti_row(TraceEvent::TX_START, b, dci);
    emit(row);
    if (dci.is_retx) {
      TraceRow retx = tti_row(TraceEvent::HARQ_RETX, b, dci);
      emit(retx);
    }
  }

  void tx_end(std::size_t b, const Dci& dci) {
    TraceRow row = tti_row(TraceEvent::TX_END, b, dci);
    emit(row);
  }

  RngStream& error_stream(std::size_t b, const Dci& dci) {
    const std::uint64_t entity = (static_cast<std::uint64_t>(units_[b]->cfg.bwp_id) << 40) |
                                 (static_cast<std::uint64_t>(dci.direction == Direction::UL) << 32) | dci.ue;
    auto it = rng_.find(entity);
    if (it == rng_.end()) it = rng_.emplace(entity, RngStream(s_.seed, "tb_error", entity)).first;
    return it->second;
  }

  void rx(std::size_t b, const Dci& dci) {
    BwpUnit& u = *units_[b];
    const auto& link = dci.direction == Direction::DL ? u.dl_link.at(dci.ue) : u.ul_link.at(dci.ue);
    const bool error = tb_error(s_.error_model, to_transport_block(dci), link.sinr_db, error_stream(b, dci));
    const auto it = u.tb_store.find(key(dci));
    if (it == u.tb_store.end()) {
      throw Error(ErrorCode::InvariantError, "no stored TB for UE " + std::to_string(dci.ue));
    }
    if (error) {
      const HarqVerdict verdict = u.sched.on_harq_feedback(dci, false);
      TraceRow row = tti_row(TraceEvent::HARQ_NACK, b, dci);
      row.add_extra("verdict", verdict == HarqVerdict::Drop ? "drop" : "retx");
      emit(row);
      if (verdict == HarqVerdict::Drop) {
        for (const auto& seg : it->second.segments) packets_[seg.packet].dropped = true;
        u.tb_store.erase(it);
      }
      return;
    }
    u.sched.on_harq_feedback(dci, true);
    TbContent content = std::move(it->second);
    u.tb_store.erase(it);
    TraceRow row = tti_row(TraceEvent::RX_MAC, b, dci);
    emit(row);
    if (dci.direction == Direction::UL && content.bsr) gnb_on_bsr(u.sched.ue_info(dci.ue), *content.bsr);
    for (const auto& seg : content.segments) {
      PacketRecord& p = packets_[seg.packet];
      p.received += seg.bytes;
      if (p.dropped || p.delivered || p.received != p.size) continue;
      const PacketId pid = seg.packet;
      if (p.direction == Direction::DL) {
        deliver(b, pid);
      } else {
        const TimeNs at = core_ul_.transit(q_.now(), p.size);
        q_.schedule(at, [this, b, pid] { deliver(b, pid); });
      }
    }
  }

  void deliver(std::size_t b, PacketId pid) {
    PacketRecord& p = packets_[pid];
    if (p.delivered) throw Error(ErrorCode::InvariantError, "packet " + std::to_string(pid) + " delivered twice");
    p.delivered = true;
    TraceRow row = base_row(TraceEvent::PKT_DELIVERED, b);
    row.ue = p.ue;
    row.flow = p.flow;
    row.direction = p.direction;
    row.add_extra("size", p.size);
    row.add_extra("pid", static_cast<std::int64_t>(pid));
    row.add_extra("delay", q_.now() - p.generated);
    emit(row);
  }

  // ---- wrap-up

  RunResult finish() {
    RunResult& res = stats_.result();
    std::int64_t queued = 0;
    for (const auto& p : packets_) {
      queued += p.rlc_remaining;
      FlowStats* f = stats_.find(p.flow);
      if (!f) continue;
      if (p.dropped) {
        f->dropped_bytes += p.size;
      } else if (!p.delivered) {
        f->buffered_bytes += p.rlc_remaining;
        f->in_flight_bytes += p.size - p.rlc_remaining;
      }
    }
    std::int64_t in_buffers = 0;
    for (const auto& u : units_) {
      for (const auto& [ue, buf] : u->dl_rlc) in_buffers += buf.bytes();
      for (const auto& [ue, mac] : u->ul_mac) in_buffers += mac.buffer().bytes();
    }
    if (queued != in_buffers) {
      throw Error(ErrorCode::InvariantError, "RLC buffers hold " + std::to_string(in_buffers) +
                                                 " bytes but packet records say " + std::to_string(queued));
    }
    for (const auto& f : res.flows) {
      if (f.generated_bytes != f.delivered_bytes + f.buffered_bytes + f.in_flight_bytes + f.dropped_bytes) {
        throw Error(ErrorCode::InvariantError, "byte conservation broken for flow " + std::to_string(f.flow_id));
      }
    }
    res.events = q_.processed();
    res.trace_rows = rows_;
    aggregate_classes(res, s_.classes);
    return std::move(res);
  }

  const Scenario& s_;
  const std::function<void(const TraceRow&)>* sink_;
  StatsCollector stats_;
  EventQueue q_;
  std::vector<std::unique_ptr<BwpUnit>> units_;
  std::vector<std::vector<TimeNs>> arrivals_;
  std::vector<PacketRecord> packets_;
  std::map<std::uint64_t, RngStream> rng_;
  CoreLink core_ul_;
  CoreLink core_dl_;
  std::uint64_t rows_ = 0;
};

}  // namespace

double ue_distance(const Scenario& scenario, const UeSpec& ue) {
  if (ue.distance_m) return *ue.distance_m;
  RngStream rng(scenario.seed, "placement", ue.id);
  const double lo = scenario.placement.min_distance_m;
  const double hi = scenario.placement.max_distance_m;
  return std::sqrt(rng.uniform() * (hi * hi - lo * lo) + lo * lo);
}

RunResult collect_stats(std::span<const TraceRow> trace, const Scenario& scenario) {
  StatsCollector c(scenario);
  for (const auto& r : trace) c.observe(r);
  RunResult res = std::move(c.result());
  aggregate_classes(res, scenario.classes);
  return res;
}

RunResult run(const Scenario& scenario, const std::function<void(const TraceRow&)>& sink) {
  Simulation sim(scenario, &sink);
  return sim.run();
}

RunResult run(const Scenario& scenario, std::ostream* trace) {
  if (!trace) {
    Simulation sim(scenario, nullptr);
    return sim.run();
  }
  *trace << kTraceHeader << '\n';
  const std::function<void(const TraceRow&)> sink = [trace](const TraceRow& r) {
    *trace << format_trace_row(r) << '\n';
  };
  Simulation sim(scenario, &sink);
  return sim.run();
}

}  // namespace nrsim

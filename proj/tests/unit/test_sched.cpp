#include <random>

#include "../support/fuzz.hpp"
#include "../support/oracle.hpp"
#include "doctest.h"
#include "nrsim/error.hpp"
#include "nrsim/mac_ul.hpp"
#include "nrsim/sched.hpp"

using namespace nrsim;

namespace {

FrameStructure fs_of(int mu, std::int64_t bw) { return derive_frame_structure(Numerology(mu), bw); }

PhyTimingConfig timing_of(int d, int k2, int ctrl = 2) {
  PhyTimingConfig t;
  t.l1l2_data_latency = t.mac_to_phy_delay = d;
  t.l1l2_ctrl_latency = ctrl;
  t.k2 = k2;
  return t;
}

std::vector<const Dci*> data_of(const SlotAllocInfo& s) {
  std::vector<const Dci*> out;
  for (const auto& e : s.entries)
    if (e.kind == AllocKind::Data) out.push_back(&e.dci);
  return out;
}

}  // namespace

TEST_CASE("sched: pf metric") {
  CHECK(pf_metric(10, 5, 1) == doctest::Approx(2.0));
  CHECK(pf_metric(10, 5, 0) == doctest::Approx(0.2));
  CHECK(pf_metric(4, 2, 2) == doctest::Approx(8.0));

  const auto fs = fs_of(1, 20'000'000);
  const ResourceContext ctx{fs, default_mcs_table()};
  PolicyConfig cfg{AccessMode::TDMA, SchedPolicy::PF, 0.0, BeamMode::LOAD};
  // alpha = 0 picks the lowest average.
  std::vector<AssignCandidate> c = {{1, 10'000, 10, 1e6, 5e5}, {2, 10'000, 10, 1e6, 3e5}};
  auto d = assign_resources(c, Direction::DL, Region{1, 1}, cfg, ctx);
  REQUIRE(d.size() == 1);
  CHECK(d[0].ue == 2);
  // Identical inputs: the lowest id wins.
  cfg.alpha = 1;
  c = {{7, 10'000, 10, 1e6, 5e5}, {3, 10'000, 10, 1e6, 5e5}};
  d = assign_resources(c, Direction::DL, Region{1, 1}, cfg, ctx);
  REQUIRE(d.size() == 1);
  CHECK(d[0].ue == 3);
}

TEST_CASE("sched: beam symbol distribution") {
  std::vector<BeamLoad> two = {{0, 10}, {1, 10}};
  CHECK(distribute_symbols_to_beams(two, 12, BeamMode::RR) == std::map<int, int>{{0, 6}, {1, 6}});
  std::vector<BeamLoad> loads = {{0, 300}, {1, 100}};
  CHECK(distribute_symbols_to_beams(loads, 12, BeamMode::LOAD) == std::map<int, int>{{0, 9}, {1, 3}});
  std::vector<BeamLoad> one = {{4, 1}};
  CHECK(distribute_symbols_to_beams(one, 12, BeamMode::LOAD) == std::map<int, int>{{4, 12}});
  CHECK(distribute_symbols_to_beams(one, 12, BeamMode::RR) == std::map<int, int>{{4, 12}});
  std::vector<BeamLoad> three = {{0, 1}, {1, 1}, {2, 1}};
  CHECK(distribute_symbols_to_beams(three, 11, BeamMode::RR) == std::map<int, int>{{0, 4}, {1, 4}, {2, 3}});
  // Largest remainder, ties to the lower beam id.
  CHECK(distribute_symbols_to_beams(three, 11, BeamMode::LOAD) == std::map<int, int>{{0, 4}, {1, 4}, {2, 3}});
  std::vector<BeamLoad> zero = {{0, 0}, {1, 50}};
  CHECK(distribute_symbols_to_beams(zero, 12, BeamMode::LOAD) == std::map<int, int>{{0, 0}, {1, 12}});

  std::mt19937 rng(7);
  for (int it = 0; it < 2000; ++it) {
    std::vector<BeamLoad> b;
    const int n = 1 + static_cast<int>(rng() % 4);
    std::int64_t total = 0;
    for (int i = 0; i < n; ++i) {
      b.push_back({i, static_cast<std::int64_t>(rng() % 5000)});
      total += b.back().load_bytes;
    }
    const int sym = static_cast<int>(rng() % 13);
    for (auto mode : {BeamMode::LOAD, BeamMode::RR}) {
      const auto m = distribute_symbols_to_beams(b, sym, mode);
      int sum = 0;
      for (auto [beam, c] : m) sum += c;
      CHECK(sum <= sym);
      if (mode == BeamMode::RR || total > 0) CHECK(sum == sym);
      if (mode == BeamMode::LOAD) {
        for (const auto& x : b) {
          if (x.load_bytes == 0) CHECK(m.at(x.beam_id) == 0);
          if (total > 0) CHECK(std::abs(m.at(x.beam_id) - double(x.load_bytes) * sym / total) < 1.0);
        }
      }
    }
  }
}

TEST_CASE("sched: rbg bitmaps") {
  std::vector<std::vector<int>> a = {{0, 1}};
  CHECK(build_rbg_bitmap(a, 4)[0].to_string() == "1100");
  std::vector<std::vector<int>> b = {{0}, {1}};
  auto bm = build_rbg_bitmap(b, 4);
  CHECK(bm[0].to_string() == "1000");
  CHECK(bm[1].to_string() == "0100");
  CHECK_FALSE(bm[0].intersects(bm[1]));
  std::vector<std::vector<int>> c = {{0, 1, 2, 3}};
  CHECK(build_rbg_bitmap(c, 4)[0] == RbgBitmap::all_ones(4));
  std::vector<std::vector<int>> clash = {{0, 2}, {2}};
  try {
    build_rbg_bitmap(clash, 4);
    FAIL("overlap accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OverlapError);
  }
}

TEST_CASE("sched: assign_resources examples") {
  const auto fs = fs_of(2, 100'000'000);
  const ResourceContext ctx{fs, default_mcs_table()};
  std::vector<AssignCandidate> three = {{1, 1'000'000, 20, 1e8, 1}, {2, 1'000'000, 20, 1e8, 1},
                                        {3, 1'000'000, 20, 1e8, 1}};
  PolicyConfig rr{AccessMode::TDMA, SchedPolicy::RR, 1, BeamMode::LOAD};
  auto d = assign_resources(three, Direction::DL, Region{}, rr, ctx);
  REQUIRE(d.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(d[i].ue == static_cast<UeId>(i + 1));
    CHECK(d[i].start_symbol == 1 + 4 * i);
    CHECK(d[i].num_symbols == 4);
    CHECK(d[i].rbg_bitmap == RbgBitmap::all_ones(fs.rbg_count));
  }

  rr.access = AccessMode::OFDMA;
  d = assign_resources(three, Direction::DL, Region{}, rr, ctx);
  REQUIRE(d.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(d[i].num_symbols == 12);
    CHECK(d[i].rbg_bitmap == RbgBitmap::block(fs.rbg_count, 6 * i, 6));
  }
  // UL ignores OFDMA.
  auto ul = assign_resources(three, Direction::UL, Region{}, rr, ctx);
  REQUIRE(ul.size() == 3);
  CHECK(ul[0].rbg_bitmap.count() == fs.rbg_count);

  // One byte of demand gets the smallest allocation that carries it.
  std::vector<AssignCandidate> tiny = {{5, 1, 0, 1e6, 1}};
  for (auto access : {AccessMode::TDMA, AccessMode::OFDMA}) {
    rr.access = access;
    d = assign_resources(tiny, Direction::DL, Region{}, rr, ctx);
    REQUIRE(d.size() == 1);
    if (access == AccessMode::TDMA) {
      CHECK(d[0].num_symbols == 1);
    } else {
      CHECK(d[0].rbg_bitmap.count() == 1);
    }
    CHECK(d[0].tbs_bytes >= 1);
  }

  CHECK(assign_resources({}, Direction::DL, Region{}, rr, ctx).empty());
}

TEST_CASE("sched: assign_resources matches the exhaustive oracle") {
  const auto& table = default_mcs_table();
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int it = 0; it < 4000; ++it) {
    oracle::Instance in;
    const int prbs = 1 + static_cast<int>(rng() % 8);
    in.fs = fs_of(0, prbs * 180'000);
    in.region = Region{1, 1 + static_cast<int>(rng() % 4)};
    in.cfg.access = rng() % 2 ? AccessMode::TDMA : AccessMode::OFDMA;
    in.cfg.policy = static_cast<SchedPolicy>(rng() % 3);
    in.cfg.alpha = (rng() % 3) * 0.5;
    in.dir = rng() % 4 == 0 ? Direction::UL : Direction::DL;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n; ++i) {
      AssignCandidate c;
      c.ue = static_cast<UeId>(10 - 3 * i + rng() % 3);
      c.demand_bytes = static_cast<std::int64_t>(1 + rng() % 300);
      c.mcs = static_cast<int>(rng() % 29);
      c.inst_rate_bps = 1e5 * (1 + rng() % 50);
      c.avg_rate_bps = 1 + static_cast<double>(rng() % 1'000'000);
      in.cands.push_back(c);
    }
    const auto dcis = assign_resources(in.cands, in.dir, in.region, in.cfg, ResourceContext{in.fs, table});
    CAPTURE(it);
    CHECK(oracle::check_geometry(in, table, dcis) == "");
    CHECK(oracle::units_from(in, dcis) == oracle::solve(in, table).units);
    ++checked;
  }
  CHECK(checked == 4000);
}

TEST_CASE("sched: PF winner is invariant to scaling all averages") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> rate(1e3, 1e9);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int it = 0; it < 1000; ++it) {
    const int n = 2 + static_cast<int>(rng() % 6);
    std::vector<double> inst(n), avg(n);
    for (int i = 0; i < n; ++i) {
      inst[i] = rate(rng);
      avg[i] = rate(rng);
    }
    const double alpha = (rng() % 5) * 0.5;
    const double c = scale(rng);
    auto winner = [&](double k) {
      int best = 0;
      for (int i = 1; i < n; ++i)
        if (pf_metric(inst[i], avg[i] * k, alpha) > pf_metric(inst[best], avg[best] * k, alpha)) best = i;
      return best;
    };
    CHECK(winner(1.0) == winner(c));
  }
}

TEST_CASE("sched: RR fairness under persistent backlog") {
  const auto fs = fs_of(1, 20'000'000);
  Scheduler s(fs, timing_of(0, 0), {AccessMode::TDMA, SchedPolicy::RR, 1, BeamMode::LOAD}, default_mcs_table());
  for (UeId u = 1; u <= 5; ++u) s.add_ue(u, 0, 10, 15);
  std::map<UeId, std::int64_t> bytes;
  SlotAddress now{};
  for (int k = 0; k < 60; ++k, now = next_slot(fs, now)) {
    for (UeId u = 1; u <= 5; ++u) s.set_dl_buffer(u, 1'000'000);
    const auto dec = s.schedule_slot(now);
    for (const auto& d : dec.dl_dcis) bytes[d.ue] += d.tbs_bytes;
    for (const auto& e : dec.dl_dcis) s.on_harq_feedback(e, true);
    s.take_air_slot(now);
    if ((k + 1) % 5 == 0) {
      std::int64_t lo = bytes[1], hi = bytes[1];
      for (auto [u, b] : bytes) {
        lo = std::min(lo, b);
        hi = std::max(hi, b);
      }
      CHECK(hi - lo <= compute_tbs(default_mcs_table(), 15, 12, fs.prb_count));
    }
  }
}

TEST_CASE("sched: MR serves the best rate") {
  const auto fs = fs_of(1, 20'000'000);
  const ResourceContext ctx{fs, default_mcs_table()};
  PolicyConfig mr{AccessMode::OFDMA, SchedPolicy::MR, 1, BeamMode::LOAD};
  std::vector<AssignCandidate> c = {{1, 100'000, 5, 1e6, 1}, {2, 100'000, 25, 9e6, 1}, {3, 100'000, 15, 4e6, 1}};
  auto d = assign_resources(c, Direction::DL, Region{}, mr, ctx);
  REQUIRE(d.size() == 1);
  CHECK(d[0].ue == 2);
  CHECK(d[0].rbg_bitmap.count() == fs.rbg_count);
  // Capped demand spills to the next best.
  c[1].demand_bytes = 100;
  d = assign_resources(c, Direction::DL, Region{}, mr, ctx);
  REQUIRE(d.size() == 2);
  CHECK(d[0].ue == 2);
  CHECK(d[1].ue == 3);
}

TEST_CASE("sched: slot grid free runs") {
  SlotGrid g(4);
  CHECK(g.free_run(Direction::DL)->first_symbol == 1);
  CHECK(g.free_run(Direction::DL)->num_symbols == 12);
  Dci d;
  d.start_symbol = 5;
  d.num_symbols = 2;
  d.rbg_bitmap = RbgBitmap::block(4, 0, 1);
  g.occupy(d);
  CHECK(g.free_run(Direction::DL)->num_symbols == 4);
  CHECK(g.free_run(Direction::UL)->first_symbol == 7);
  CHECK(g.free_run(Direction::UL)->num_symbols == 6);
  CHECK_FALSE(g.is_free(5, 1, RbgBitmap::block(4, 0, 2)));
  CHECK(g.is_free(5, 1, RbgBitmap::block(4, 1, 3)));
  CHECK_FALSE(g.is_free(12, 2, RbgBitmap::block(4, 1, 1)));
  d.start_symbol = 1;
  d.num_symbols = 12;
  d.rbg_bitmap = RbgBitmap::all_ones(4);
  g.occupy(d);
  CHECK_FALSE(g.free_run(Direction::DL));
}

TEST_CASE("sched: retransmission placement") {
  const int rbgs = 6;
  auto slot = make_ctrl_only_slot({0, 0, 0}, rbgs);
  Dci r;
  r.ue = 1;
  r.direction = Direction::DL;
  r.start_symbol = 7;
  r.num_symbols = 4;
  r.rbg_bitmap = RbgBitmap::block(rbgs, 3, 2);
  r.harq_process = 3;
  std::vector<Dci> pending = {r};
  auto res = harq_schedule_retx(pending, slot, rbgs);
  REQUIRE(res.placed.size() == 1);
  CHECK(res.placed[0].start_symbol == 1);
  CHECK(res.placed[0].num_symbols == 4);
  CHECK(res.placed[0].rbg_bitmap.count() == 2);
  CHECK(res.placed[0].is_retx);
  CHECK(res.deferred.empty());
  CHECK(res.slot.data_count() == 1);

  auto full = slot;
  Dci big;
  big.ue = 9;
  big.start_symbol = 1;
  big.num_symbols = 12;
  big.rbg_bitmap = RbgBitmap::all_ones(rbgs);
  full.entries.push_back({AllocKind::Data, big});
  res = harq_schedule_retx(pending, full, rbgs);
  CHECK(res.placed.empty());
  REQUIRE(res.deferred.size() == 1);
  CHECK(res.deferred[0] == r);
  CHECK(res.slot == full);

  // UL scans down from symbol 12.
  r.direction = Direction::UL;
  res = harq_schedule_retx(std::vector<Dci>{r}, slot, rbgs);
  REQUIRE(res.placed.size() == 1);
  CHECK(res.placed[0].start_symbol == 9);

  Dci a = r, b = r, c = r;
  a.harq_process = 2;
  b.harq_process = 5;
  c.harq_process = 9;
  const std::vector<Dci> q = {c, a, b};
  auto ordered = order_retx_round_robin(q, 4, 16);
  CHECK(ordered[0].harq_process == 5);
  CHECK(ordered[1].harq_process == 9);
  CHECK(ordered[2].harq_process == 2);
  ordered = order_retx_round_robin(q, 0, 16);
  CHECK(ordered[0].harq_process == 2);
}

TEST_CASE("sched: UL grant timing") {
  const auto fs = fs_of(1, 20'000'000);
  for (int k2 : {2, 0}) {
    CAPTURE(k2);
    Scheduler s(fs, timing_of(2, k2), {}, default_mcs_table());
    s.add_ue(1, 0, 10, 10);
    s.on_bsr(1, 300);
    const auto dec = s.schedule_slot({0, 0, 0});
    CHECK(dec.dl_target == SlotAddress{0, 1, 0});
    CHECK(dec.ul_target == advance_slots(fs, {0, 0, 0}, 2 + k2));
    REQUIRE(dec.ul_dcis.size() == 1);
    const Dci& g = dec.ul_dcis[0];
    CHECK(g.k2_slots == k2);
    CHECK(g.decision_slot == SlotAddress{0, 0, 0});
    CHECK(g.target_slot == (k2 == 2 ? SlotAddress{0, 2, 0} : SlotAddress{0, 1, 0}));
    CHECK(g.tbs_bytes >= 304);
    // The grant is carried by the PDCCH of now+d.
    auto carrier = s.take_air_slot({0, 1, 0});
    REQUIRE(carrier.ul_grants.size() == 1);
    CHECK(carrier.ul_grants[0] == g);
    if (k2 == 0) {
      CHECK(data_of(carrier.alloc).size() == 1);
    } else {
      CHECK(data_of(carrier.alloc).empty());
      CHECK(data_of(s.take_air_slot({0, 2, 0}).alloc).size() == 1);
    }
  }
}

TEST_CASE("sched: SR gets a blind grant after the control latency") {
  const auto fs = fs_of(1, 20'000'000);
  Scheduler s(fs, timing_of(2, 2, 2), {}, default_mcs_table());
  s.add_ue(1, 0, 10, 10);
  const SlotAddress sr{0, 1, 0};  // index 2, received at index 3
  s.on_sr(1, sr);
  std::optional<Dci> grant;
  SlotAddress now{};
  for (int k = 0; k < 8 && !grant; ++k, now = next_slot(fs, now)) {
    const auto dec = s.schedule_slot(now);
    if (!dec.ul_dcis.empty()) grant = dec.ul_dcis[0];
  }
  REQUIRE(grant);
  CHECK(grant->decision_slot == SlotAddress{0, 1, 1});
  CHECK(grant->num_symbols == blind_grant_symbols(fs, default_mcs_table(), 10));
  CHECK(grant->start_symbol + grant->num_symbols == 13);
  CHECK(grant->tbs_bytes >= 4);
  CHECK(s.pending_sr_count() == 0);
}

TEST_CASE("sched: empty scheduler emits control only") {
  const auto fs = fs_of(2, 40'000'000);
  Scheduler s(fs, timing_of(2, 2), {}, default_mcs_table());
  const auto dec = s.schedule_slot({0, 0, 0});
  CHECK(dec.dl.entries.size() == 2);
  CHECK(dec.ul.entries.size() == 2);
  CHECK(dec.dl.data_count() == 0);
  CHECK(dec.dl_dcis.empty());
  CHECK(dec.ul_dcis.empty());
}

TEST_CASE("sched: HARQ retransmission takes priority and drops after four tries") {
  const auto fs = fs_of(1, 20'000'000);
  Scheduler s(fs, timing_of(0, 0), {}, default_mcs_table());
  s.add_ue(1, 0, 10, 10);
  s.add_ue(2, 0, 10, 10);
  s.set_dl_buffer(1, 100'000);
  auto dec = s.schedule_slot({0, 0, 0});
  REQUIRE(dec.dl_dcis.size() == 1);
  Dci tb = dec.dl_dcis[0];
  CHECK(tb.num_symbols == 12);
  s.take_air_slot({0, 0, 0});
  SlotAddress now{0, 0, 1};
  for (int attempt = 2; attempt <= 4; ++attempt) {
    CHECK(s.on_harq_feedback(tb, false) == HarqVerdict::Retransmit);
    s.set_dl_buffer(2, 100'000);
    dec = s.schedule_slot(now);
    REQUIRE(!dec.dl_dcis.empty());
    CHECK(dec.dl_dcis[0].is_retx);
    CHECK(dec.dl_dcis[0].ue == 1);
    CHECK(dec.dl_dcis[0].harq_process == tb.harq_process);
    tb = dec.dl_dcis[0];
    s.take_air_slot(now);
    now = next_slot(fs, now);
  }
  CHECK(s.on_harq_feedback(tb, false) == HarqVerdict::Drop);
  CHECK(s.pending_retx_count() == 0);
  CHECK_FALSE(s.ue_info(1).harq_dl[tb.harq_process].busy);

  Dci ul;
  ul.ue = 2;
  ul.direction = Direction::UL;
  ul.harq_process = 0;
  s.ue_info(2).harq_ul[0] = {true, 4};
  CHECK(s.on_harq_feedback(ul, false) == HarqVerdict::Drop);
  CHECK(s.ue_info(2).buffered_bytes_ul >= 1);
}

TEST_CASE("sched: disjointness fuzz over every policy and access mode") {
  int seed = 0;
  for (auto p : {SchedPolicy::RR, SchedPolicy::PF, SchedPolicy::MR}) {
    for (auto a : {AccessMode::TDMA, AccessMode::OFDMA}) {
      for (int rep = 0; rep < 5; ++rep) {
        const auto out = fuzz::run(p, a, 300, 1000 + seed++);
        CHECK(out.violations == 0);
        CHECK(out.data_entries > 0);
      }
    }
  }
}

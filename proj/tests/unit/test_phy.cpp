#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nrsim/error.hpp"
#include "nrsim/phy.hpp"

using namespace nrsim;

namespace {

McsTable flat_table(std::int64_t micro) { return McsTable(std::vector<std::int64_t>(kMcsCount, micro)); }

Dci data_dci(UeId ue, int start, int len, RbgBitmap bm, Direction dir = Direction::DL) {
  Dci d;
  d.ue = ue;
  d.direction = dir;
  d.start_symbol = start;
  d.num_symbols = len;
  d.rbg_bitmap = std::move(bm);
  d.tbs_bytes = 10;
  return d;
}

}  // namespace

TEST_CASE("phy: sinr examples") {
  ChannelParams ch;
  ch.ref_distance_m = 1;
  ch.ref_loss_db = 60;
  ch.noise_dbm = -90;
  ch.exponent = 2;
  CHECK(compute_sinr(23, 1, ch) == doctest::Approx(53.0));
  CHECK(compute_sinr(23, 10, ch) == doctest::Approx(33.0));
  ch.exponent = 3.5;
  CHECK(compute_sinr(23, 1, ch) == doctest::Approx(23 - 60 + 90));
  CHECK(path_loss_db(100, ch) - path_loss_db(10, ch) == doctest::Approx(35.0));

  // Interference adds in linear power: equal noise and interference cost 3.0103 dB.
  ch.interference_dbm = -90;
  CHECK(compute_sinr(23, 1, ch) == doctest::Approx(53.0 - 10 * std::log10(2.0)));

  for (double d : {0.0, -1.0}) {
    try {
      compute_sinr(23, d, ch);
      FAIL("accepted distance");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonPositiveDistance);
    }
  }
}

TEST_CASE("phy: cqi mapping") {
  CHECK(sinr_to_cqi(-30) == 0);
  CHECK(sinr_to_cqi(-1e9) == 0);
  CHECK(sinr_to_cqi(60) == 15);
  // Bucket edges at -6 + 2.4 k belong to the upper bucket.
  for (int k = 0; k <= 15; ++k) {
    CHECK(sinr_to_cqi(-6.0 + 2.4 * k) == k);
    if (k > 0) CHECK(sinr_to_cqi(-6.0 + 2.4 * k - 1e-6) == k - 1);
  }
  int prev = 0;
  for (double s = -20; s <= 50; s += 0.05) {
    const int q = sinr_to_cqi(s);
    CHECK(q >= prev);
    prev = q;
  }
  CHECK(cqi_to_mcs(0) == 0);
  CHECK(cqi_to_mcs(15) == 28);
  for (int c = 1; c <= 15; ++c) CHECK(cqi_to_mcs(c) >= cqi_to_mcs(c - 1));
}

TEST_CASE("phy: threshold sinr is the lowest sinr reaching the mcs") {
  for (int mcs = 1; mcs < kMcsCount; ++mcs) {
    CAPTURE(mcs);
    const double s = sinr_min_for_mcs(mcs);
    CHECK(cqi_to_mcs(sinr_to_cqi(s)) >= mcs);
    CHECK(cqi_to_mcs(sinr_to_cqi(s - 1e-6)) < mcs);
  }
  CHECK(std::isinf(sinr_min_for_mcs(0)));
}

TEST_CASE("phy: mcs table") {
  const auto& t = default_mcs_table();
  CHECK(t.size() == 29);
  CHECK(t.micro_efficiency(0) == 200'000);
  CHECK(t.micro_efficiency(28) == 5'500'000);
  for (int m = 1; m < 29; ++m) CHECK(t.micro_efficiency(m) > t.micro_efficiency(m - 1));

  std::stringstream ss;
  write_mcs_table(ss, t);
  CHECK(parse_mcs_table(ss) == t);

  const auto shipped = load_mcs_table(std::string(NRSIM_SOURCE_DIR) + "/data/mcs_table.csv");
  CHECK(shipped == t);

  std::stringstream bad("mcs,efficiency_bits_per_re\n0,1.0\n");
  CHECK_THROWS_AS(parse_mcs_table(bad), Error);
  CHECK_THROWS_AS(McsTable(std::vector<std::int64_t>(29, 0)), Error);
}

TEST_CASE("phy: tbs examples") {
  const auto one = flat_table(1'000'000);
  CHECK(compute_tbs(one, 5, 1, 1) == 1);
  CHECK(compute_tbs(one, 5, 1, 55) == 82);
  CHECK(compute_tbs(one, 5, 3, 1) == 4);
  CHECK_THROWS_AS(compute_tbs(one, 5, 1, 0), Error);
  CHECK_THROWS_AS(compute_tbs(one, 5, 0, 1), Error);
  try {
    compute_tbs(one, 29, 1, 1);
    FAIL("accepted mcs 29");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidMcs);
  }
}

TEST_CASE("phy: tbs is monotone and matches the closed form") {
  const auto& t = default_mcs_table();
  for (int mcs = 0; mcs < 29; mcs += 3) {
    for (int s = 1; s <= 12; ++s) {
      for (int p = 1; p <= 280; p += 13) {
        const auto v = compute_tbs(t, mcs, s, p);
        const double eff = std::round((0.2 + mcs * 5.3 / 28.0) * 1e6) / 1e6;
        CHECK(v == static_cast<std::int64_t>(std::floor(s * p * 12 * eff / 8 + 1e-9)));
        if (mcs + 3 < 29) CHECK(compute_tbs(t, mcs + 3, s, p) >= v);
        if (s < 12) CHECK(compute_tbs(t, mcs, s + 1, p) >= v);
        CHECK(compute_tbs(t, mcs, s, p + 13) >= v);
      }
    }
  }
}

TEST_CASE("phy: error model") {
  TransportBlock tb;
  tb.mcs = 10;
  RngStream rng(1, "tb_error", 1);
  CHECK_FALSE(tb_error({ErrorModel::Mode::None, 0.5}, tb, 0, rng));
  CHECK(rng.position() == 0);
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(tb_error({ErrorModel::Mode::Bernoulli, 0.0}, tb, 0, rng));
    CHECK(tb_error({ErrorModel::Mode::Bernoulli, 1.0}, tb, 0, rng));
  }
  CHECK(rng.position() == 200);

  const double smin = sinr_min_for_mcs(10);
  CHECK(tb_error({ErrorModel::Mode::Threshold, 0}, tb, smin - 2, rng));
  CHECK_FALSE(tb_error({ErrorModel::Mode::Threshold, 0}, tb, smin, rng));

  RngStream a(9, "tb_error", 3), b(9, "tb_error", 3);
  for (int i = 0; i < 1000; ++i) {
    CHECK(tb_error({ErrorModel::Mode::Bernoulli, 0.3}, tb, 0, a) ==
          tb_error({ErrorModel::Mode::Bernoulli, 0.3}, tb, 0, b));
  }
  RngStream c(9, "tb_error", 4);
  int hits = 0;
  for (int i = 0; i < 20000; ++i) hits += tb_error({ErrorModel::Mode::Bernoulli, 0.3}, tb, 0, c);
  CHECK(hits / 20000.0 == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("phy: slot cycle") {
  const auto fs = derive_frame_structure(Numerology(3), 100'000'000);
  PhyTimingConfig timing;
  timing.ue_decode_latency = DecodeLatency::fixed(100'000);
  const SlotAddress addr{2, 3, 5};
  const TimeNs start = slot_start_time(fs, addr);

  auto empty = make_ctrl_only_slot(addr, fs.rbg_count);
  auto ev = phy_slot_cycle(fs, timing, empty);
  REQUIRE(ev.size() == 2);
  CHECK(ev[0].kind == PhyEvent::Kind::StartSlot);
  CHECK(ev[0].ts == start);
  CHECK(ev[1].kind == PhyEvent::Kind::EndSlot);
  CHECK(ev[1].ts - ev[0].ts == fs.slot_duration);

  auto one = empty;
  one.entries.push_back({AllocKind::Data, data_dci(1, 1, 4, RbgBitmap::all_ones(fs.rbg_count))});
  ev = phy_slot_cycle(fs, timing, one);
  REQUIRE(ev.size() == 5);
  CHECK(ev[1].kind == PhyEvent::Kind::StartVarTti);
  CHECK(ev[1].ts == start + symbol_offset(fs, 1));
  CHECK(ev[2].kind == PhyEvent::Kind::EndVarTti);
  CHECK(ev[2].ts == start + symbol_offset(fs, 5));
  CHECK(ev[3].kind == PhyEvent::Kind::EndSlot);
  CHECK(ev[4].kind == PhyEvent::Kind::MacPduIndication);
  CHECK(ev[4].ts == ev[2].ts + 100'000);
  for (std::size_t i = 1; i < ev.size(); ++i) CHECK(ev[i].ts >= ev[i - 1].ts);

  timing.ue_decode_latency = DecodeLatency::slots(2);
  ev = phy_slot_cycle(fs, timing, one);
  CHECK(ev.back().ts == start + symbol_offset(fs, 5) + 2 * fs.slot_duration);

  auto clash = one;
  clash.entries.push_back({AllocKind::Data, data_dci(2, 4, 2, RbgBitmap::block(fs.rbg_count, 0, 1))});
  try {
    phy_slot_cycle(fs, timing, clash);
    FAIL("overlap accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OverlapError);
  }
  auto ctrl_hit = empty;
  ctrl_hit.entries.push_back({AllocKind::Data, data_dci(2, 12, 2, RbgBitmap::all_ones(fs.rbg_count))});
  CHECK_THROWS_AS(phy_slot_cycle(fs, timing, ctrl_hit), Error);
}

TEST_CASE("phy: timing validation") {
  std::vector<ValidationIssue> issues;
  PhyTimingConfig t;
  validate_timing(t, issues, "p");
  CHECK(issues.empty());
  t.k2 = 33;
  t.mac_to_phy_delay = 3;
  t.l1l2_ctrl_latency = -1;
  validate_timing(t, issues, "p");
  CHECK(issues.size() == 3);
}

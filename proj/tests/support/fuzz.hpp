// Randomized scheduler driver used by the disjointness properties.
#pragma once

#include <random>

#include "nrsim/sched.hpp"
#include "oracle.hpp"

namespace fuzz {

using namespace nrsim;

struct Outcome {
  int vectors = 0;
  int violations = 0;
  std::int64_t data_entries = 0;
};

/// Drives one scheduler for `vectors` slots; every slot draws a fresh random
/// demand vector (DL buffers, BSRs, SRs) and random HARQ feedback.
inline Outcome run(SchedPolicy policy, AccessMode access, int vectors, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int mus[] = {0, 1, 2, 3};
  const std::int64_t bws[] = {5'000'000, 20'000'000, 40'000'000, 100'000'000};
  const int mu = mus[pick(0, 3)];
  const auto fs = derive_frame_structure(Numerology(mu), bws[pick(0, 3)]);
  PhyTimingConfig timing;
  timing.l1l2_data_latency = timing.mac_to_phy_delay = pick(0, 3);
  timing.l1l2_ctrl_latency = pick(0, 3);
  timing.k2 = pick(0, 4);
  PolicyConfig cfg{access, policy, pick(0, 2) * 0.5, pick(0, 1) ? BeamMode::LOAD : BeamMode::RR};
  Scheduler s(fs, timing, cfg, default_mcs_table(), 4);
  const int ues = pick(1, 8);
  for (int u = 1; u <= ues; ++u) s.add_ue(u, pick(0, 2), 0, pick(0, 28), std::nullopt, pick(0, 28));

  Outcome out;
  SlotAddress now{};
  std::vector<Dci> inflight;
  for (int v = 0; v < vectors; ++v) {
    for (int u = 1; u <= ues; ++u) {
      if (pick(0, 2) == 0) s.set_dl_buffer(u, pick(0, 1) ? pick(1, 200) : pick(1, 60'000));
      if (pick(0, 4) == 0) s.on_bsr(u, pick(0, 1) ? pick(0, 100) : pick(0, 20'000));
      if (pick(0, 6) == 0) s.on_sr(u, now);
    }
    for (const auto& d : inflight) s.on_harq_feedback(d, pick(0, 3) != 0);
    inflight.clear();
    const auto dec = s.schedule_slot(now);
    out.violations += oracle::count_violations(dec.dl, fs.rbg_count);
    out.violations += oracle::count_violations(dec.ul, fs.rbg_count);
    for (const auto& d : dec.dl_dcis) inflight.push_back(d);
    for (const auto& d : dec.ul_dcis) inflight.push_back(d);
    const auto air = s.take_air_slot(now);
    out.violations += oracle::count_violations(air.alloc, fs.rbg_count);
    out.data_entries += static_cast<std::int64_t>(air.alloc.data_count());
    now = next_slot(fs, now);
    ++out.vectors;
  }
  // Drain what is still queued ahead.
  for (int k = 0; k < 40; ++k, now = next_slot(fs, now)) {
    out.violations += oracle::count_violations(s.take_air_slot(now).alloc, fs.rbg_count);
  }
  return out;
}

}  // namespace fuzz

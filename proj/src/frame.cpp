#include "nrsim/frame.hpp"

#include "nrsim/error.hpp"

namespace nrsim {

Numerology::Numerology(int mu) : mu_(mu) {
  if (mu < 0 || mu > kMaxNumerology) {
    throw Error(ErrorCode::InvalidNumerology, "mu=" + std::to_string(mu) + " outside 0..5");
  }
}

std::string to_string(const SlotAddress& addr) {
  return std::to_string(addr.frame) + "." + std::to_string(addr.subframe) + "." +
         std::to_string(addr.slot);
}

FrameStructure derive_frame_structure(Numerology mu, std::int64_t bandwidth_hz) {
  FrameStructure fs;
  fs.mu = mu;
  fs.slots_per_subframe = 1 << mu.value();
  fs.slot_duration = kSubframeDuration / fs.slots_per_subframe;
  fs.scs_hz = (std::int64_t{1} << mu.value()) * 15'000;
  fs.bandwidth_hz = bandwidth_hz;
  const std::int64_t prb_width = fs.scs_hz * kSubcarriersPerPrb;
  const std::int64_t prbs = bandwidth_hz > 0 ? bandwidth_hz / prb_width : 0;
  if (prbs < 1) {
    throw Error(ErrorCode::BandwidthTooNarrow,
                std::to_string(bandwidth_hz) + " Hz holds no PRB at mu=" +
                    std::to_string(mu.value()));
  }
  fs.prb_count = static_cast<int>(prbs);
  fs.symbol_duration = symbol_offset(fs, 1);
  fs.rbg_size = rbg_size(fs.prb_count);
  fs.rbg_count = rbg_count(fs.prb_count);
  return fs;
}

TimeNs symbol_offset(const FrameStructure& fs, int k) {
  const TimeNs num = fs.slot_duration * k;
  TimeNs q = num / kSymbolsPerSlot;
  const TimeNs r = num % kSymbolsPerSlot;
  if (2 * r > kSymbolsPerSlot || (2 * r == kSymbolsPerSlot && (q & 1) != 0)) ++q;
  return q;
}

bool is_valid(const FrameStructure& fs, const SlotAddress& addr) {
  return addr.frame >= 0 && addr.subframe >= 0 && addr.subframe < kSubframesPerFrame &&
         addr.slot >= 0 && addr.slot < fs.slots_per_subframe;
}

TimeNs slot_start_time(const FrameStructure& fs, const SlotAddress& addr) {
  if (!is_valid(fs, addr)) {
    throw Error(ErrorCode::InvalidAddress, to_string(addr) + " invalid for mu=" +
                                               std::to_string(fs.mu.value()));
  }
  return addr.frame * kFrameDuration + addr.subframe * kSubframeDuration +
         addr.slot * fs.slot_duration;
}

SlotAddress next_slot(const FrameStructure& fs, const SlotAddress& addr) {
  SlotAddress next = addr;
  if (++next.slot == fs.slots_per_subframe) {
    next.slot = 0;
    if (++next.subframe == kSubframesPerFrame) {
      next.subframe = 0;
      ++next.frame;
    }
  }
  return next;
}

std::int64_t slot_index(const FrameStructure& fs, const SlotAddress& addr) {
  return (addr.frame * kSubframesPerFrame + addr.subframe) * fs.slots_per_subframe + addr.slot;
}

SlotAddress slot_from_index(const FrameStructure& fs, std::int64_t index) {
  SlotAddress addr;
  addr.slot = static_cast<int>(index % fs.slots_per_subframe);
  const std::int64_t subframes = index / fs.slots_per_subframe;
  addr.subframe = static_cast<int>(subframes % kSubframesPerFrame);
  addr.frame = subframes / kSubframesPerFrame;
  return addr;
}

SlotAddress advance_slots(const FrameStructure& fs, const SlotAddress& addr, std::int64_t n) {
  return slot_from_index(fs, slot_index(fs, addr) + n);
}

SlotAddress slot_at(const FrameStructure& fs, TimeNs ts) {
  return slot_from_index(fs, ts / fs.slot_duration);
}

int rbg_size(int prb_count) {
  if (prb_count <= 36) return 2;
  if (prb_count <= 72) return 4;
  if (prb_count <= 144) return 8;
  return 16;
}

int rbg_count(int prb_count) {
  const int size = rbg_size(prb_count);
  return (prb_count + size - 1) / size;
}

int prbs_in_rbg(const FrameStructure& fs, int rbg) {
  const int first = rbg * fs.rbg_size;
  const int last = first + fs.rbg_size;
  return (last <= fs.prb_count ? last : fs.prb_count) - first;
}

}  // namespace nrsim

#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace nrsim {

/// Simulation time in integer nanoseconds.
using TimeNs = std::int64_t;
__extension__ typedef __int128 Int128;

inline constexpr TimeNs kNsPerUs = 1'000;
inline constexpr TimeNs kNsPerMs = 1'000'000;
inline constexpr TimeNs kNsPerS = 1'000'000'000;

inline constexpr int kSymbolsPerSlot = 14;
inline constexpr int kSubcarriersPerPrb = 12;
inline constexpr int kSubframesPerFrame = 10;
inline constexpr TimeNs kSubframeDuration = kNsPerMs;
inline constexpr TimeNs kFrameDuration = 10 * kNsPerMs;
inline constexpr int kMaxNumerology = 5;

/// NR numerology index; construction rejects values outside 0..5.
class Numerology {
 public:
  constexpr Numerology() = default;
  explicit Numerology(int mu);

  constexpr int value() const noexcept { return mu_; }
  friend constexpr auto operator<=>(Numerology, Numerology) = default;

 private:
  int mu_ = 0;
};

struct FrameStructure {
  Numerology mu;
  int slots_per_subframe = 1;
  TimeNs slot_duration = kNsPerMs;
  int symbols_per_slot = kSymbolsPerSlot;
  /// CP-inclusive symbol length, rounded to ns. Boundaries inside a slot
  /// come from symbol_offset(), never from multiples of this value.
  TimeNs symbol_duration = 0;
  std::int64_t scs_hz = 15'000;
  std::int64_t bandwidth_hz = 0;
  int prb_count = 0;
  int subcarriers_per_prb = kSubcarriersPerPrb;
  int subframes_per_frame = kSubframesPerFrame;
  TimeNs frame_duration = kFrameDuration;
  int rbg_size = 2;
  int rbg_count = 0;

  friend bool operator==(const FrameStructure&, const FrameStructure&) = default;
};

struct SlotAddress {
  std::int64_t frame = 0;
  int subframe = 0;
  int slot = 0;

  friend constexpr auto operator<=>(const SlotAddress&, const SlotAddress&) = default;
};

std::string to_string(const SlotAddress& addr);

FrameStructure derive_frame_structure(Numerology mu, std::int64_t bandwidth_hz);

/// Offset of symbol boundary k (0..14) from the slot start: slot_duration*k/14
/// rounded half-to-even. symbol_offset(fs, 14) == slot_duration.
TimeNs symbol_offset(const FrameStructure& fs, int k);

bool is_valid(const FrameStructure& fs, const SlotAddress& addr);
TimeNs slot_start_time(const FrameStructure& fs, const SlotAddress& addr);
SlotAddress next_slot(const FrameStructure& fs, const SlotAddress& addr);

/// Absolute slot count since (0,0,0) and its inverse.
std::int64_t slot_index(const FrameStructure& fs, const SlotAddress& addr);
SlotAddress slot_from_index(const FrameStructure& fs, std::int64_t index);
SlotAddress advance_slots(const FrameStructure& fs, const SlotAddress& addr, std::int64_t n);

/// Slot containing timestamp ts (ts >= 0).
SlotAddress slot_at(const FrameStructure& fs, TimeNs ts);

/// RBG size in PRBs for a bandwidth part of prb_count PRBs
/// (1-36 -> 2, 37-72 -> 4, 73-144 -> 8, >= 145 -> 16).
int rbg_size(int prb_count);
int rbg_count(int prb_count);

/// Number of PRBs inside RBG `rbg` (the last RBG may be partial).
int prbs_in_rbg(const FrameStructure& fs, int rbg);

}  // namespace nrsim

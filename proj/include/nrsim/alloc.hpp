#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "nrsim/bitmap.hpp"
#include "nrsim/frame.hpp"

namespace nrsim {

enum class Direction { DL, UL };

std::string_view to_string(Direction d);

using UeId = std::uint32_t;

// Slot layout: symbol 0 carries the PDCCH, symbol 13 the PUCCH, 1..12 are
// dynamically shared between DL and UL data.
inline constexpr int kDlCtrlSymbol = 0;
inline constexpr int kUlCtrlSymbol = 13;
inline constexpr int kFirstDataSymbol = 1;
inline constexpr int kLastDataSymbol = 12;
inline constexpr int kDataSymbols = kLastDataSymbol - kFirstDataSymbol + 1;

/// A scheduling grant (UL) or assignment (DL).
struct Dci {
  UeId ue = 0;
  Direction direction = Direction::DL;
  int start_symbol = kFirstDataSymbol;
  int num_symbols = 0;
  RbgBitmap rbg_bitmap;
  int mcs = 0;
  std::int64_t tbs_bytes = 0;
  int harq_process = 0;
  bool is_retx = false;
  /// UL only; equals the configured K2.
  int k2_slots = 0;
  /// Slot whose indication produced this DCI, and the slot it applies to.
  SlotAddress decision_slot;
  SlotAddress target_slot;

  int end_symbol() const { return start_symbol + num_symbols; }
  friend bool operator==(const Dci&, const Dci&) = default;
};

enum class AllocKind { Ctrl, Data };

struct VarTtiAllocInfo {
  AllocKind kind = AllocKind::Data;
  Dci dci;

  friend bool operator==(const VarTtiAllocInfo&, const VarTtiAllocInfo&) = default;
};

struct SlotAllocInfo {
  SlotAddress addr;
  std::vector<VarTtiAllocInfo> entries;

  std::size_t data_count() const;
  friend bool operator==(const SlotAllocInfo&, const SlotAllocInfo&) = default;
};

/// Both control entries of an otherwise empty slot.
SlotAllocInfo make_ctrl_only_slot(const SlotAddress& addr, int rbg_count);

/// True when the (symbol range x RBG set) rectangles of a and b intersect.
bool overlaps(const Dci& a, const Dci& b);

/// Throws OverlapError when two data entries overlap and InvariantError when
/// a data entry leaves the data region or a control entry leaves its symbol.
void check_slot_alloc(const SlotAllocInfo& alloc);

}  // namespace nrsim

#include "nrsim/alloc.hpp"

#include <algorithm>

#include "nrsim/error.hpp"

namespace nrsim {

std::string_view to_string(Direction d) { return d == Direction::DL ? "DL" : "UL"; }

std::size_t SlotAllocInfo::data_count() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(),
      [](const VarTtiAllocInfo& e) { return e.kind == AllocKind::Data; }));
}

SlotAllocInfo make_ctrl_only_slot(const SlotAddress& addr, int rbg_count) {
  SlotAllocInfo alloc;
  alloc.addr = addr;
  VarTtiAllocInfo dl_ctrl;
  dl_ctrl.kind = AllocKind::Ctrl;
  dl_ctrl.dci.direction = Direction::DL;
  dl_ctrl.dci.start_symbol = kDlCtrlSymbol;
  dl_ctrl.dci.num_symbols = 1;
  dl_ctrl.dci.rbg_bitmap = RbgBitmap::all_ones(rbg_count);
  dl_ctrl.dci.target_slot = addr;
  VarTtiAllocInfo ul_ctrl = dl_ctrl;
  ul_ctrl.dci.direction = Direction::UL;
  ul_ctrl.dci.start_symbol = kUlCtrlSymbol;
  alloc.entries = {dl_ctrl, ul_ctrl};
  return alloc;
}

bool overlaps(const Dci& a, const Dci& b) {
  const bool time = a.start_symbol < b.end_symbol() && b.start_symbol < a.end_symbol();
  return time && a.rbg_bitmap.intersects(b.rbg_bitmap);
}

void check_slot_alloc(const SlotAllocInfo& alloc) {
  std::vector<const Dci*> data;
  for (const auto& e : alloc.entries) {
    const Dci& d = e.dci;
    if (e.kind == AllocKind::Ctrl) {
      if (d.num_symbols != 1 || (d.start_symbol != kDlCtrlSymbol && d.start_symbol != kUlCtrlSymbol)) {
        throw Error(ErrorCode::InvariantError, "control entry off symbols 0/13 in slot " +
                                                   to_string(alloc.addr));
      }
      continue;
    }
    if (d.num_symbols < 1 || d.start_symbol < kFirstDataSymbol || d.end_symbol() > kLastDataSymbol + 1) {
      throw Error(ErrorCode::InvariantError,
                  "data entry outside symbols 1..12 in slot " + to_string(alloc.addr));
    }
    if (d.rbg_bitmap.none()) {
      throw Error(ErrorCode::InvariantError, "data entry with empty RBG bitmap in slot " +
                                                 to_string(alloc.addr));
    }
    data.push_back(&d);
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = i + 1; j < data.size(); ++j) {
      if (overlaps(*data[i], *data[j])) {
        throw Error(ErrorCode::OverlapError, "UE " + std::to_string(data[i]->ue) + " and UE " +
                                                 std::to_string(data[j]->ue) + " overlap in slot " +
                                                 to_string(alloc.addr));
      }
    }
  }
}

}  // namespace nrsim

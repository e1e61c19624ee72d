#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nrsim/alloc.hpp"
#include "nrsim/frame.hpp"

namespace nrsim {

enum class TraceEvent {
  SLOT_START,
  SLOT_END,
  DCI_DL,
  DCI_UL,
  SR,
  BSR,
  TX_START,
  TX_END,
  RX_MAC,
  PKT_ARRIVAL,
  PKT_DELIVERED,
  HARQ_NACK,
  HARQ_RETX,
};

std::string_view to_string(TraceEvent e);
std::optional<TraceEvent> parse_trace_event(std::string_view s);

inline constexpr std::string_view kTraceHeader =
    "ts_ns,event,bwp_id,ue_id,flow_id,frame,subframe,slot,symbol_start,num_symbols,"
    "rbg_bitmap_hex,direction,mcs,tbs_bytes,harq_process,is_retx,extra";

/// One trace line; unset optionals render as empty fields.
struct TraceRow {
  TimeNs ts = 0;
  TraceEvent event = TraceEvent::SLOT_START;
  std::optional<int> bwp;
  std::optional<UeId> ue;
  std::optional<std::uint32_t> flow;
  std::optional<SlotAddress> addr;
  std::optional<int> symbol_start;
  std::optional<int> num_symbols;
  std::string rbg_hex;
  std::optional<Direction> direction;
  std::optional<int> mcs;
  std::optional<std::int64_t> tbs;
  std::optional<int> harq;
  std::optional<bool> retx;
  /// "key=value;" pairs.
  std::string extra;

  std::optional<std::string> extra_value(std::string_view key) const;
  std::optional<std::int64_t> extra_int(std::string_view key) const;
  void add_extra(std::string_view key, std::string_view value);
  void add_extra(std::string_view key, std::int64_t value);

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Fill the allocation columns of a row from a DCI.
void set_dci_fields(TraceRow& row, const Dci& dci);

std::string format_trace_row(const TraceRow& row);
/// Throws ParseError (line number from the caller) on malformed input.
TraceRow parse_trace_row(std::string_view line, int line_no = 0);

/// Reads header + rows; throws ParseError on a bad header or row.
std::vector<TraceRow> read_trace(std::istream& in);
std::vector<TraceRow> read_trace_file(const std::string& path);

std::optional<SlotAddress> parse_slot_address(std::string_view s);

}  // namespace nrsim

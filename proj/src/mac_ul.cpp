#include "nrsim/mac_ul.hpp"

#include <algorithm>

#include "nrsim/error.hpp"

namespace nrsim {

void RlcBuffer::push(const RlcPacket& pkt) {
  if (pkt.size_bytes <= 0) throw Error(ErrorCode::ConfigError, "packet size must be positive");
  queue_.push_back({pkt, pkt.size_bytes});
  bytes_ += pkt.size_bytes;
}

std::vector<RlcSegment> RlcBuffer::dequeue(std::int64_t max_bytes) {
  std::vector<RlcSegment> out;
  while (max_bytes > 0 && !queue_.empty()) {
    Entry& head = queue_.front();
    const std::int64_t take = std::min(max_bytes, head.remaining);
    head.remaining -= take;
    max_bytes -= take;
    bytes_ -= take;
    out.push_back({head.pkt.id, head.pkt.flow, take, head.remaining == 0});
    if (head.remaining == 0) queue_.pop_front();
  }
  return out;
}

std::vector<PacketId> RlcBuffer::queued_ids() const {
  std::vector<PacketId> ids;
  ids.reserve(queue_.size());
  for (const auto& e : queue_) ids.push_back(e.pkt.id);
  return ids;
}

std::string_view to_string(SrState s) {
  switch (s) {
    case SrState::Idle: return "IDLE";
    case SrState::SrSent: return "SR_SENT";
    case SrState::Granted: return "GRANTED";
  }
  return "IDLE";
}

SrEmission next_pucch(const FrameStructure& fs, TimeNs ts) {
  SlotAddress slot = slot_at(fs, std::max<TimeNs>(ts, 0));
  TimeNs pucch = slot_start_time(fs, slot) + symbol_offset(fs, kUlCtrlSymbol);
  if (pucch <= ts) {
    slot = next_slot(fs, slot);
    pucch = slot_start_time(fs, slot) + symbol_offset(fs, kUlCtrlSymbol);
  }
  return {slot, pucch};
}

int blind_grant_symbols(const FrameStructure& fs, const McsTable& table, int mcs) {
  for (int s = 1; s <= kDataSymbols; ++s) {
    if (compute_tbs(table, mcs, s, fs.prb_count) >= kBsrOverheadBytes) return s;
  }
  throw Error(ErrorCode::ConfigError,
              "a BSR does not fit in " + std::to_string(kDataSymbols) + " symbols at mcs " + std::to_string(mcs));
}

std::optional<SrEmission> UeUlMac::on_ul_data_arrival(const FrameStructure& fs, const RlcPacket& pkt) {
  const bool was_empty = buffer_.empty();
  buffer_.push(pkt);
  if (!was_empty || state_ != SrState::Idle) return std::nullopt;
  state_ = SrState::SrSent;
  ++sr_count_;
  return next_pucch(fs, pkt.enqueue_ts);
}

void UeUlMac::on_grant_received() {
  ++outstanding_;
  state_ = SrState::Granted;
}

PuschContent UeUlMac::on_ul_grant(const Dci& dci) {
  if (dci.direction != Direction::UL) throw Error(ErrorCode::InvariantError, "DL DCI given to the UL MAC");
  outstanding_ = std::max(outstanding_ - 1, 0);
  PuschContent out;
  out.occupancy_before = buffer_.bytes();
  if (dci.tbs_bytes < kBsrOverheadBytes) {
    if (outstanding_ == 0 && state_ == SrState::Granted) {
      state_ = buffer_.empty() ? SrState::Idle : SrState::Granted;
    }
    throw Error(ErrorCode::GrantTooSmall, "UL grant of " + std::to_string(dci.tbs_bytes) +
                                              " bytes cannot carry a BSR (UE " + std::to_string(ue_) + ")");
  }
  out.segments = buffer_.dequeue(dci.tbs_bytes - kBsrOverheadBytes);
  for (const auto& s : out.segments) out.data_bytes += s.bytes;
  out.bsr.reported_bytes = buffer_.bytes();
  if (buffer_.empty() && outstanding_ == 0) state_ = SrState::Idle;
  return out;
}

void gnb_on_bsr(SchedUeInfo& info, const Bsr& bsr) {
  info.buffered_bytes_ul = std::max<std::int64_t>(bsr.reported_bytes, 0);
}

std::map<UeId, std::int64_t> count_sr_events(std::span<const TraceRow> trace, std::optional<int> bwp) {
  std::map<UeId, std::int64_t> out;
  for (const auto& r : trace) {
    if (r.event != TraceEvent::SR || !r.ue) continue;
    if (bwp && r.bwp != bwp) continue;
    ++out[*r.ue];
  }
  return out;
}

}  // namespace nrsim

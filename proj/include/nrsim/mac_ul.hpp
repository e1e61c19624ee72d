#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "nrsim/alloc.hpp"
#include "nrsim/frame.hpp"
#include "nrsim/phy.hpp"
#include "nrsim/sched.hpp"
#include "nrsim/trace.hpp"

namespace nrsim {

using PacketId = std::uint64_t;

struct RlcPacket {
  PacketId id = 0;
  std::uint32_t flow = 0;
  std::int64_t size_bytes = 0;
  TimeNs enqueue_ts = 0;
};

/// Part of a packet carried by one transport block.
struct RlcSegment {
  PacketId packet = 0;
  std::uint32_t flow = 0;
  std::int64_t bytes = 0;
  /// Whether this segment ends the packet.
  bool last = false;

  friend bool operator==(const RlcSegment&, const RlcSegment&) = default;
};

/// FIFO of whole or partially sent packets; segmentation is free.
class RlcBuffer {
 public:
  void push(const RlcPacket& pkt);
  std::vector<RlcSegment> dequeue(std::int64_t max_bytes);

  std::int64_t bytes() const { return bytes_; }
  bool empty() const { return bytes_ == 0; }
  std::size_t packets() const { return queue_.size(); }
  /// Ids of packets with bytes still queued, head first.
  std::vector<PacketId> queued_ids() const;

 private:
  struct Entry {
    RlcPacket pkt;
    std::int64_t remaining;
  };
  std::deque<Entry> queue_;
  std::int64_t bytes_ = 0;
};

enum class SrState { Idle, SrSent, Granted };
std::string_view to_string(SrState s);

struct Bsr {
  std::int64_t reported_bytes = 0;
  friend bool operator==(const Bsr&, const Bsr&) = default;
};

struct SrEmission {
  SlotAddress slot;
  /// Start of the PUCCH symbol carrying the request.
  TimeNs ts = 0;
};

/// What one PUSCH carries.
struct PuschContent {
  std::vector<RlcSegment> segments;
  std::int64_t data_bytes = 0;
  Bsr bsr;
  /// Occupancy before the data was taken out.
  std::int64_t occupancy_before = 0;
};

/// First PUCCH (symbol 13) that starts strictly after ts.
SrEmission next_pucch(const FrameStructure& fs, TimeNs ts);

/// Fewest full-band symbols whose TBS carries a 4-byte BSR. ConfigError if
/// twelve symbols are not enough.
int blind_grant_symbols(const FrameStructure& fs, const McsTable& table, int mcs);

/// UE side of the UL handshake for one bandwidth part.
class UeUlMac {
 public:
  explicit UeUlMac(UeId ue = 0) : ue_(ue) {}

  std::optional<SrEmission> on_ul_data_arrival(const FrameStructure& fs, const RlcPacket& pkt);
  /// The UE decoded a new UL grant in a PDCCH.
  void on_grant_received();
  /// Build the PUSCH for a new grant. Throws GrantTooSmall when the TB
  /// cannot hold the BSR; the grant is then consumed with nothing sent.
  PuschContent on_ul_grant(const Dci& dci);

  UeId ue() const { return ue_; }
  SrState state() const { return state_; }
  std::int64_t sr_count() const { return sr_count_; }
  int outstanding_grants() const { return outstanding_; }
  const RlcBuffer& buffer() const { return buffer_; }

 private:
  UeId ue_;
  RlcBuffer buffer_;
  SrState state_ = SrState::Idle;
  std::int64_t sr_count_ = 0;
  int outstanding_ = 0;
};

/// gNB demand update from a received BSR.
void gnb_on_bsr(SchedUeInfo& info, const Bsr& bsr);

/// SR rows per UE (all bandwidth parts together, or only `bwp` when given).
std::map<UeId, std::int64_t> count_sr_events(std::span<const TraceRow> trace,
                                             std::optional<int> bwp = std::nullopt);

}  // namespace nrsim

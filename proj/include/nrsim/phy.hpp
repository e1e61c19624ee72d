#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "nrsim/alloc.hpp"
#include "nrsim/error.hpp"
#include "nrsim/frame.hpp"
#include "nrsim/rng.hpp"

namespace nrsim {

/// Transport-block decode latency: either a fixed duration or a multiple of
/// the slot length of the numerology it is applied to.
struct DecodeLatency {
  enum class Mode { Fixed, SlotMultiple };

  Mode mode = Mode::Fixed;
  TimeNs fixed_ns = 100 * kNsPerUs;
  int slot_multiple = 0;

  static DecodeLatency fixed(TimeNs ns) { return {Mode::Fixed, ns, 0}; }
  static DecodeLatency slots(int k) { return {Mode::SlotMultiple, 0, k}; }

  TimeNs resolve(const FrameStructure& fs) const {
    return mode == Mode::Fixed ? fixed_ns : fs.slot_duration * slot_multiple;
  }
  friend bool operator==(const DecodeLatency&, const DecodeLatency&) = default;
};

/// Slot-denominated MAC/PHY timing of one bandwidth part.
struct PhyTimingConfig {
  int l1l2_ctrl_latency = 2;
  int l1l2_data_latency = 2;
  int k2 = 2;
  /// Same mechanism as l1l2_data_latency; kept as its own key and required to match.
  int mac_to_phy_delay = 2;
  DecodeLatency ue_decode_latency;

  friend bool operator==(const PhyTimingConfig&, const PhyTimingConfig&) = default;
};

void validate_timing(const PhyTimingConfig& t, std::vector<ValidationIssue>& issues,
                     const std::string& where);

/// Log-distance abstract channel shared by every link of a bandwidth part.
struct ChannelParams {
  double ref_distance_m = 1.0;
  double ref_loss_db = 70.0;
  double exponent = 2.5;
  double noise_dbm = -95.0;
  /// Aggregate interference; -inf means SNR only.
  double interference_dbm = -std::numeric_limits<double>::infinity();
  double ue_tx_power_dbm = 23.0;

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

double path_loss_db(double distance_m, const ChannelParams& ch);
double compute_sinr(double tx_power_dbm, double distance_m, const ChannelParams& ch);

int sinr_to_cqi(double sinr_db);
int cqi_to_mcs(int cqi);
/// Lowest SINR whose CQI maps to an MCS >= mcs (threshold error model).
double sinr_min_for_mcs(int mcs);

struct LinkState {
  double distance_m = 0;
  double sinr_db = 0;
  int cqi = 0;
  int mcs = 0;
};

LinkState make_link_state(double tx_power_dbm, double distance_m, const ChannelParams& ch);

inline constexpr int kMcsCount = 29;

/// Spectral efficiency per MCS in micro-bits per resource element.
class McsTable {
 public:
  explicit McsTable(std::vector<std::int64_t> micro_efficiency);

  int size() const { return static_cast<int>(eff_.size()); }
  std::int64_t micro_efficiency(int mcs) const;
  double efficiency(int mcs) const { return static_cast<double>(micro_efficiency(mcs)) * 1e-6; }

  friend bool operator==(const McsTable&, const McsTable&) = default;

 private:
  std::vector<std::int64_t> eff_;
};

/// 29 entries linearly spaced from 0.2 to 5.5 bits/RE, rounded to 1e-6.
const McsTable& default_mcs_table();
/// CSV "mcs,efficiency_bits_per_re" with header and 29 rows.
McsTable parse_mcs_table(std::istream& in);
McsTable load_mcs_table(const std::string& path);
void write_mcs_table(std::ostream& out, const McsTable& table);

/// floor(symbols * prbs * 12 * efficiency(mcs) / 8), exact in integers.
std::int64_t compute_tbs(const McsTable& table, int mcs, int num_symbols, int num_prbs);

struct TransportBlock {
  std::int64_t tbs_bytes = 0;
  int mcs = 0;
  RbgBitmap rbg_bitmap;
  int start_symbol = kFirstDataSymbol;
  int num_symbols = 1;
  UeId ue = 0;
  Direction direction = Direction::DL;
  int harq_process = 0;
};

TransportBlock to_transport_block(const Dci& dci);

struct ErrorModel {
  enum class Mode { None, Bernoulli, Threshold };
  Mode mode = Mode::None;
  double p = 0.0;

  friend bool operator==(const ErrorModel&, const ErrorModel&) = default;
};

/// Whether the block is received in error. Bernoulli mode consumes exactly
/// one draw from `rng` per call; the other modes consume none.
bool tb_error(const ErrorModel& model, const TransportBlock& tb, double sinr_db, RngStream& rng);

/// Timeline of one slot as seen by the PHY of a bandwidth part.
struct PhyEvent {
  enum class Kind { StartSlot, StartVarTti, EndVarTti, MacPduIndication, EndSlot };
  Kind kind;
  TimeNs ts;
  /// Index into SlotAllocInfo::entries for TTI events; -1 otherwise.
  int entry = -1;
};

/// StartSlot/EndSlot bracket the slot; each data TTI gets Start/EndVarTti at
/// its symbol boundaries and a MAC PDU indication decode_latency after its
/// end. Events are ordered by (ts, emission order). Throws OverlapError.
std::vector<PhyEvent> phy_slot_cycle(const FrameStructure& fs, const PhyTimingConfig& timing,
                                     const SlotAllocInfo& alloc);

}  // namespace nrsim

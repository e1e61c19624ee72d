#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "nrsim/alloc.hpp"
#include "nrsim/frame.hpp"
#include "nrsim/phy.hpp"

namespace nrsim {

enum class AccessMode { TDMA, OFDMA };
enum class SchedPolicy { RR, PF, MR };
enum class BeamMode { LOAD, RR };

std::string_view to_string(AccessMode m);
std::string_view to_string(SchedPolicy p);
std::string_view to_string(BeamMode m);

struct PolicyConfig {
  AccessMode access = AccessMode::TDMA;
  SchedPolicy policy = SchedPolicy::RR;
  double alpha = 1.0;
  BeamMode beam_mode = BeamMode::LOAD;

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

/// PF average-rate window in slots and the floor that keeps the metric finite.
inline constexpr double kPfWindowSlots = 100.0;
inline constexpr double kPfRateFloorBps = 1.0;
inline constexpr int kDefaultHarqProcesses = 16;
/// Transmissions of one TB (first + retransmissions) before it is dropped.
inline constexpr int kMaxHarqTransmissions = 4;
/// Bytes of every PUSCH taken by the piggybacked BSR.
inline constexpr std::int64_t kBsrOverheadBytes = 4;

struct HarqProcessState {
  bool busy = false;
  int transmissions = 0;
};

/// gNB-side view of one UE inside one bandwidth part.
struct SchedUeInfo {
  UeId ue = 0;
  int beam_id = 0;
  std::int64_t buffered_bytes_dl = 0;
  /// Last BSR minus what has been granted since.
  std::int64_t buffered_bytes_ul = 0;
  int cqi = 0;
  int mcs = 0;
  int cqi_ul = 0;
  int mcs_ul = 0;
  double avg_rate_dl_bps = kPfRateFloorBps;
  double avg_rate_ul_bps = kPfRateFloorBps;
  std::vector<HarqProcessState> harq_dl;
  std::vector<HarqProcessState> harq_ul;
  /// Resource units received so far; orders round-robin candidates.
  std::int64_t rr_units_dl = 0;
  std::int64_t rr_units_ul = 0;
};

double pf_metric(double inst_rate_bps, double avg_rate_bps, double alpha);

struct BeamLoad {
  int beam_id = 0;
  std::int64_t load_bytes = 0;
};

/// Split `data_symbols` among beams. LOAD: proportional to load with
/// largest-remainder rounding (ties to lower beam id), zero-load beams get
/// nothing. RR: equal split, earlier beams absorb the remainder.
std::map<int, int> distribute_symbols_to_beams(std::span<const BeamLoad> beams, int data_symbols,
                                               BeamMode mode);

/// One UE competing for a region, projected onto a single direction.
struct AssignCandidate {
  UeId ue = 0;
  std::int64_t demand_bytes = 0;
  int mcs = 0;
  double inst_rate_bps = 0;
  double avg_rate_bps = kPfRateFloorBps;
};

/// Contiguous symbols spanning every RBG of the bandwidth part.
struct Region {
  int first_symbol = kFirstDataSymbol;
  int num_symbols = kDataSymbols;
};

struct ResourceContext {
  const FrameStructure& fs;
  const McsTable& mcs_table;
};

/// Resource units granted per candidate (same order as the input) and the
/// order in which candidates first won a unit.
struct UnitAllocation {
  std::vector<int> units;
  std::vector<std::size_t> first_win_order;
};

/// Bytes carried by `units` resource units for the given access geometry.
std::int64_t units_tbs(const ResourceContext& ctx, AccessMode access, int mcs, int units,
                       int span_symbols);
/// Fewest units whose TBS covers `demand_bytes`, or -1 when none of up to
/// `max_units` is enough.
int units_for_demand(const ResourceContext& ctx, AccessMode access, int mcs,
                     std::int64_t demand_bytes, int span_symbols, int max_units);

/// Iterative per-unit argmax. RR prefers the fewest units so far (ties to
/// list order); MR the highest instantaneous rate; PF the highest
/// inst^alpha / potential-average, re-evaluated after every unit. MR and PF
/// ties go to the lowest UE id.
UnitAllocation select_units(std::span<const AssignCandidate> candidates, std::span<const int> caps,
                            int units, const PolicyConfig& cfg, std::span<const double> unit_rate_bps);

/// Distribute a region among candidates. TDMA units are whole symbols over
/// every RBG; OFDMA units are single RBGs over the whole region. UL always
/// uses TDMA. Each winner gets one contiguous block; DCIs are returned in
/// packing order with harq_process unset (0).
std::vector<Dci> assign_resources(std::span<const AssignCandidate> candidates, Direction dir,
                                  const Region& region, const PolicyConfig& cfg,
                                  const ResourceContext& ctx);

/// Per-UE RBG index sets to bitmaps; throws OverlapError if two sets share an index.
std::vector<RbgBitmap> build_rbg_bitmap(std::span<const std::vector<int>> assignment, int rbg_count);

/// Symbol x RBG occupancy of one slot.
class SlotGrid {
 public:
  explicit SlotGrid(int rbg_count);
  explicit SlotGrid(const SlotAllocInfo& alloc, int rbg_count);

  bool is_free(int start_symbol, int num_symbols, const RbgBitmap& bm) const;
  void occupy(const Dci& dci);
  bool symbol_free(int symbol) const;
  /// Largest run of fully free data symbols: the first one scanning up from
  /// symbol 1 (DL) or down from symbol 12 (UL).
  std::optional<Region> free_run(Direction dir) const;

 private:
  int rbg_count_;
  std::vector<RbgBitmap> used_;
};

struct RetxOutcome {
  SlotAllocInfo slot;
  std::vector<Dci> placed;
  std::vector<Dci> deferred;
};

/// Place retransmissions ahead of new data. Each keeps its symbol count and
/// RBG cardinality but may move: DL scans start symbols upward from 1, UL
/// downward from 12, RBG offsets upward. Non-fitting DCIs are deferred intact.
RetxOutcome harq_schedule_retx(std::span<const Dci> pending, SlotAllocInfo slot, int rbg_count);

/// Order pending retransmissions round-robin over HARQ process ids, starting
/// at `cursor`; insertion order breaks ties.
std::vector<Dci> order_retx_round_robin(std::span<const Dci> pending, int cursor, int harq_processes);

/// What the scheduler will put on the air in one slot.
struct AirSlot {
  SlotAllocInfo alloc;
  /// UL grants carried by this slot's PDCCH (they apply k2 slots later).
  std::vector<Dci> ul_grants;
};

struct SlotDecision {
  SlotAddress dl_target;
  SlotAddress ul_target;
  /// Snapshots of the two target slots after this decision.
  SlotAllocInfo dl;
  SlotAllocInfo ul;
  /// DCIs produced by this decision.
  std::vector<Dci> dl_dcis;
  std::vector<Dci> ul_dcis;
};

enum class HarqVerdict { Ack, Retransmit, Drop };

/// Per-BWP MAC scheduler. Works d slots ahead for DL and d+k2 for UL.
class Scheduler {
 public:
  Scheduler(const FrameStructure& fs, const PhyTimingConfig& timing, const PolicyConfig& policy,
            const McsTable& table, int harq_processes = kDefaultHarqProcesses);

  /// UL link quality defaults to the DL one when not given.
  void add_ue(UeId ue, int beam_id, int cqi, int mcs, std::optional<int> cqi_ul = std::nullopt,
              std::optional<int> mcs_ul = std::nullopt);
  bool has_ue(UeId ue) const { return ues_.count(ue) != 0; }
  SchedUeInfo& ue_info(UeId ue);
  const SchedUeInfo& ue_info(UeId ue) const;
  const std::map<UeId, SchedUeInfo>& ues() const { return ues_; }

  void set_dl_buffer(UeId ue, std::int64_t bytes);
  void on_sr(UeId ue, const SlotAddress& sr_slot);
  void on_bsr(UeId ue, std::int64_t reported_bytes);
  /// A UL TB was dropped after its last HARQ attempt: keep UL demand alive
  /// so the UE receives a grant carrying a fresh BSR.
  void on_ul_tb_lost(UeId ue);
  HarqVerdict on_harq_feedback(const Dci& dci, bool ack);

  SlotDecision schedule_slot(const SlotAddress& now);
  /// Removes and returns the complete allocation of `addr` (control-only
  /// when nothing was scheduled).
  AirSlot take_air_slot(const SlotAddress& addr);

  const FrameStructure& frame() const { return fs_; }
  const PhyTimingConfig& timing() const { return timing_; }
  const PolicyConfig& policy() const { return policy_; }
  std::size_t pending_sr_count() const { return pending_srs_.size(); }
  std::size_t pending_retx_count() const { return retx_dl_.size() + retx_ul_.size(); }

 private:
  struct PendingSr {
    UeId ue;
    SlotAddress slot;
  };

  AirSlot& air_slot(const SlotAddress& addr);
  double inst_rate(int mcs) const;
  std::optional<int> claim_harq(SchedUeInfo& info, Direction dir);
  void schedule_ul(const SlotAddress& now, const SlotAddress& target, SlotDecision& out,
                   std::map<UeId, std::int64_t>& served_bits);
  void schedule_dl(const SlotAddress& now, const SlotAddress& target, SlotDecision& out,
                   std::map<UeId, std::int64_t>& served_bits);
  void place_retx(std::vector<Dci>& queue, int& cursor, const SlotAddress& now, AirSlot& slot,
                  std::vector<Dci>& produced, std::map<UeId, std::int64_t>& served_bits);
  void finish_dci(Dci& dci, const SlotAddress& now, const SlotAddress& target) const;

  FrameStructure fs_;
  PhyTimingConfig timing_;
  PolicyConfig policy_;
  McsTable table_;
  int harq_processes_;
  std::map<UeId, SchedUeInfo> ues_;
  std::map<std::int64_t, AirSlot> air_;
  std::vector<PendingSr> pending_srs_;
  std::vector<Dci> retx_dl_;
  std::vector<Dci> retx_ul_;
  int retx_cursor_dl_ = 0;
  int retx_cursor_ul_ = 0;
};

}  // namespace nrsim

#include <algorithm>
#include <functional>

#include "doctest.h"
#include "nrsim/check.hpp"
#include "nrsim/engine.hpp"

using namespace nrsim;

namespace {

const std::string kDir = std::string(NRSIM_SOURCE_DIR) + "/scenarios";

std::vector<TraceRow> trace_of(const std::string& name) {
  std::vector<TraceRow> rows;
  run(load_scenario(kDir + "/" + name), [&](const TraceRow& r) { rows.push_back(r); });
  return rows;
}

void set_extra(TraceRow& row, const std::string& key, std::int64_t value) {
  std::string out;
  std::size_t pos = 0;
  while (pos < row.extra.size()) {
    const auto end = row.extra.find(';', pos);
    const std::string kv = row.extra.substr(pos, end - pos);
    if (kv.rfind(key + "=", 0) != 0) out += kv + ";";
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  row.extra = out;
  row.add_extra(key, value);
}

std::size_t index_of(const std::vector<TraceRow>& rows, TraceEvent e) {
  const auto it = std::find_if(rows.begin(), rows.end(), [&](const TraceRow& r) { return r.event == e; });
  REQUIRE(it != rows.end());
  return static_cast<std::size_t>(it - rows.begin());
}

bool flags(const std::vector<TraceRow>& rows, const std::string& rule) {
  const auto f = check_trace(rows);
  return std::any_of(f.begin(), f.end(), [&](const Finding& x) { return x.rule == rule; });
}

}  // namespace

TEST_CASE("check: simulator traces are clean") {
  for (const char* name : {"ul_timing.scn", "ul_sensors.scn", "two_bwp.scn", "dl_harq.scn"}) {
    CAPTURE(name);
    const auto f = check_trace(trace_of(name));
    for (const auto& x : f) CAPTURE(x.rule + ": " + x.message);
    CHECK(f.empty());
  }
}

TEST_CASE("check: corrupted traces are flagged") {
  const auto clean = trace_of("ul_timing.scn");
  REQUIRE(check_trace(clean).empty());

  SUBCASE("overlapping allocation") {
    auto rows = clean;
    const auto i = index_of(rows, TraceEvent::TX_START);
    TraceRow twin = rows[i];
    twin.ue = 2;
    rows.insert(rows.begin() + static_cast<std::ptrdiff_t>(i) + 1, twin);
    CHECK(flags(rows, "disjointness"));
  }
  SUBCASE("allocation on a control symbol") {
    auto rows = clean;
    rows[index_of(rows, TraceEvent::TX_START)].num_symbols = 2;
    CHECK(flags(rows, "disjointness"));
  }
  SUBCASE("grant pointing at the wrong slot") {
    auto rows = clean;
    set_extra(rows[index_of(rows, TraceEvent::DCI_UL)], "k2", 3);
    CHECK(flags(rows, "timing"));
  }
  SUBCASE("grant with a wrong decision distance") {
    auto rows = clean;
    set_extra(rows[index_of(rows, TraceEvent::DCI_UL)], "d", 1);
    CHECK(flags(rows, "timing"));
  }
  SUBCASE("spurious SR") {
    auto rows = clean;
    const auto i = index_of(rows, TraceEvent::SR);
    rows.insert(rows.begin() + static_cast<std::ptrdiff_t>(i) + 1, rows[i]);
    CHECK(flags(rows, "sr_necessity"));
  }
  SUBCASE("missing SR") {
    auto rows = clean;
    rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(index_of(rows, TraceEvent::SR)));
    CHECK(flags(rows, "sr_necessity"));
  }
  SUBCASE("dishonest BSR") {
    auto rows = clean;
    set_extra(rows[index_of(rows, TraceEvent::BSR)], "bsr", 5);
    CHECK(flags(rows, "bsr_honesty"));
  }
  SUBCASE("double delivery") {
    auto rows = clean;
    const auto i = index_of(rows, TraceEvent::PKT_DELIVERED);
    rows.insert(rows.begin() + static_cast<std::ptrdiff_t>(i) + 1, rows[i]);
    CHECK(flags(rows, "conservation"));
  }
  SUBCASE("timestamps out of order") {
    auto rows = clean;
    const auto i = index_of(rows, TraceEvent::PKT_DELIVERED);
    rows[i].ts = rows[i - 1].ts - 1;
    CHECK(flags(rows, "order"));
  }
  SUBCASE("off-grid slot timestamp") {
    auto rows = clean;
    rows[index_of(rows, TraceEvent::DCI_UL)].ts += 1;
    CHECK(flags(rows, "clock"));
  }
}

TEST_CASE("check: findings carry row numbers") {
  auto rows = trace_of("ul_timing.scn");
  const auto i = index_of(rows, TraceEvent::BSR);
  set_extra(rows[i], "occ", 1);
  const auto f = check_trace(rows);
  REQUIRE_FALSE(f.empty());
  CHECK(f[0].rule == "bsr_honesty");
  CHECK(f[0].row == i + 1);
}

#include "nrsim/trace.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>

#include "nrsim/error.hpp"

namespace nrsim {

namespace {

constexpr std::array<std::string_view, 13> kEventNames = {
    "SLOT_START", "SLOT_END", "DCI_DL",     "DCI_UL",        "SR",        "BSR",       "TX_START",
    "TX_END",     "RX_MAC",   "PKT_ARRIVAL", "PKT_DELIVERED", "HARQ_NACK", "HARQ_RETX",
};

template <typename T>
void put(std::string& out, const std::optional<T>& v) {
  if (v) out += std::to_string(*v);
  out += ',';
}

std::vector<std::string_view> split_fields(std::string_view line, std::size_t expect) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (out.size() + 1 < expect) {
    const auto comma = line.find(',', pos);
    if (comma == std::string_view::npos) break;
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  out.push_back(line.substr(pos));
  return out;
}

template <typename T>
std::optional<T> num(std::string_view s, int line_no, std::string_view what) {
  if (s.empty()) return std::nullopt;
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ParseError(line_no, "bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(TraceEvent e) { return kEventNames[static_cast<std::size_t>(e)]; }

std::optional<TraceEvent> parse_trace_event(std::string_view s) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == s) return static_cast<TraceEvent>(i);
  }
  return std::nullopt;
}

std::optional<std::string> TraceRow::extra_value(std::string_view key) const {
  std::string_view rest = extra;
  while (!rest.empty()) {
    const auto semi = rest.find(';');
    const std::string_view pair = rest.substr(0, semi);
    const auto eq = pair.find('=');
    if (eq != std::string_view::npos && pair.substr(0, eq) == key) {
      return std::string(pair.substr(eq + 1));
    }
    if (semi == std::string_view::npos) break;
    rest.remove_prefix(semi + 1);
  }
  return std::nullopt;
}

std::optional<std::int64_t> TraceRow::extra_int(std::string_view key) const {
  const auto v = extra_value(key);
  if (!v) return std::nullopt;
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc{} || p != v->data() + v->size()) return std::nullopt;
  return out;
}

void TraceRow::add_extra(std::string_view key, std::string_view value) {
  extra += key;
  extra += '=';
  extra += value;
  extra += ';';
}

void TraceRow::add_extra(std::string_view key, std::int64_t value) { add_extra(key, std::to_string(value)); }

void set_dci_fields(TraceRow& row, const Dci& dci) {
  row.ue = dci.ue;
  row.symbol_start = dci.start_symbol;
  row.num_symbols = dci.num_symbols;
  row.rbg_hex = dci.rbg_bitmap.to_hex();
  row.direction = dci.direction;
  row.mcs = dci.mcs;
  row.tbs = dci.tbs_bytes;
  row.harq = dci.harq_process;
  row.retx = dci.is_retx;
}

std::string format_trace_row(const TraceRow& r) {
  std::string out;
  out.reserve(96);
  out += std::to_string(r.ts);
  out += ',';
  out += to_string(r.event);
  out += ',';
  put(out, r.bwp);
  put(out, r.ue);
  put(out, r.flow);
  if (r.addr) {
    out += std::to_string(r.addr->frame) + ',' + std::to_string(r.addr->subframe) + ',' +
           std::to_string(r.addr->slot) + ',';
  } else {
    out += ",,,";
  }
  put(out, r.symbol_start);
  put(out, r.num_symbols);
  out += r.rbg_hex;
  out += ',';
  if (r.direction) out += to_string(*r.direction);
  out += ',';
  put(out, r.mcs);
  put(out, r.tbs);
  put(out, r.harq);
  if (r.retx) out += *r.retx ? '1' : '0';
  out += ',';
  out += r.extra;
  return out;
}

TraceRow parse_trace_row(std::string_view line, int line_no) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto f = split_fields(line, 17);
  if (f.size() != 17) {
    throw ParseError(line_no, "expected 17 fields, got " + std::to_string(f.size()));
  }
  TraceRow r;
  r.ts = num<TimeNs>(f[0], line_no, "ts_ns").value_or(0);
  const auto ev = parse_trace_event(f[1]);
  if (!ev) throw ParseError(line_no, "unknown event '" + std::string(f[1]) + "'");
  r.event = *ev;
  r.bwp = num<int>(f[2], line_no, "bwp_id");
  r.ue = num<UeId>(f[3], line_no, "ue_id");
  r.flow = num<std::uint32_t>(f[4], line_no, "flow_id");
  const auto fr = num<std::int64_t>(f[5], line_no, "frame");
  const auto sf = num<int>(f[6], line_no, "subframe");
  const auto sl = num<int>(f[7], line_no, "slot");
  if (fr && sf && sl) r.addr = SlotAddress{*fr, *sf, *sl};
  r.symbol_start = num<int>(f[8], line_no, "symbol_start");
  r.num_symbols = num<int>(f[9], line_no, "num_symbols");
  r.rbg_hex = std::string(f[10]);
  if (f[11] == "DL") {
    r.direction = Direction::DL;
  } else if (f[11] == "UL") {
    r.direction = Direction::UL;
  } else if (!f[11].empty()) {
    throw ParseError(line_no, "bad direction '" + std::string(f[11]) + "'");
  }
  r.mcs = num<int>(f[12], line_no, "mcs");
  r.tbs = num<std::int64_t>(f[13], line_no, "tbs_bytes");
  r.harq = num<int>(f[14], line_no, "harq_process");
  if (const auto rt = num<int>(f[15], line_no, "is_retx")) r.retx = *rt != 0;
  r.extra = std::string(f[16]);
  return r;
}

std::vector<TraceRow> read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty trace");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw ParseError(1, "unexpected trace header");
  std::vector<TraceRow> rows;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    rows.push_back(parse_trace_row(line, n));
  }
  return rows;
}

std::vector<TraceRow> read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  return read_trace(in);
}

std::optional<SlotAddress> parse_slot_address(std::string_view s) {
  SlotAddress a;
  const auto d1 = s.find('.');
  const auto d2 = d1 == std::string_view::npos ? d1 : s.find('.', d1 + 1);
  if (d2 == std::string_view::npos) return std::nullopt;
  auto part = [](std::string_view p, auto& out) {
    const auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), out);
    return ec == std::errc{} && ptr == p.data() + p.size();
  };
  if (!part(s.substr(0, d1), a.frame) || !part(s.substr(d1 + 1, d2 - d1 - 1), a.subframe) ||
      !part(s.substr(d2 + 1), a.slot)) {
    return std::nullopt;
  }
  return a;
}

}  // namespace nrsim

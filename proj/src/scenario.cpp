#include "nrsim/scenario.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "nrsim/error.hpp"
#include "nrsim/rng.hpp"

namespace nrsim {

std::string_view to_string(GeneratorKind g) { return g == GeneratorKind::CBR ? "CBR" : "ONOFF"; }

std::string_view to_string(TraceSlots t) {
  switch (t) {
    case TraceSlots::Active: return "active";
    case TraceSlots::All: return "all";
    case TraceSlots::None: return "none";
  }
  return "active";
}

// ---------------------------------------------------------------------------
// Text -> tree

namespace {

struct Token {
  enum Kind { Word, Open, Close, Assign, End } kind;
  std::string text;
  int line;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : s_(text) {}

  Token next() {
    skip();
    if (i_ >= s_.size()) return {Token::End, "", line_};
    const char c = s_[i_];
    if (c == '{') return ++i_, Token{Token::Open, "{", line_};
    if (c == '}') return ++i_, Token{Token::Close, "}", line_};
    if (c == '=') return ++i_, Token{Token::Assign, "=", line_};
    if (c == '"') {
      const int start_line = line_;
      std::string out;
      ++i_;
      while (i_ < s_.size() && s_[i_] != '"') {
        if (s_[i_] == '\n') throw ParseError(line_, "unterminated string");
        out += s_[i_++];
      }
      if (i_ >= s_.size()) throw ParseError(start_line, "unterminated string");
      ++i_;
      return {Token::Word, out, start_line};
    }
    std::string out;
    while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '{' &&
           s_[i_] != '}' && s_[i_] != '=' && s_[i_] != '#' && s_[i_] != '"') {
      out += s_[i_++];
    }
    return {Token::Word, out, line_};
  }

 private:
  void skip() {
    while (i_ < s_.size()) {
      if (s_[i_] == '\n') {
        ++line_;
        ++i_;
      } else if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
        ++i_;
      } else if (s_[i_] == '#') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else {
        break;
      }
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
  int line_ = 1;
};

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

void parse_body(Lexer& lex, ConfigNode& node, bool nested, int open_line) {
  for (;;) {
    Token t = lex.next();
    if (t.kind == Token::End) {
      if (nested) throw ParseError(open_line, "section opened here is never closed");
      return;
    }
    if (t.kind == Token::Close) {
      if (!nested) throw ParseError(t.line, "unmatched '}'");
      return;
    }
    if (t.kind != Token::Word || !is_identifier(t.text)) {
      throw ParseError(t.line, "expected a key or section name, got '" + t.text + "'");
    }
    Token op = lex.next();
    if (op.kind == Token::Open) {
      ConfigNode::Section sec{t.text, {}, t.line};
      parse_body(lex, sec.body, true, t.line);
      node.sections.push_back(std::move(sec));
    } else if (op.kind == Token::Assign) {
      Token v = lex.next();
      if (v.kind != Token::Word) throw ParseError(v.line, "missing value for '" + t.text + "'");
      node.leaves.push_back({t.text, v.text, t.line});
    } else {
      throw ParseError(op.line, "expected '=' or '{' after '" + t.text + "'");
    }
  }
}

}  // namespace

ConfigNode parse_config(std::string_view text) {
  Lexer lex(text);
  ConfigNode root;
  parse_body(lex, root, false, 0);
  return root;
}

void apply_override(ConfigNode& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ParseError(0, "override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string value(assignment.substr(eq + 1));
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string seg; std::getline(ss, seg, '.');) parts.push_back(seg);

  ConfigNode* node = &root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    std::string name = parts[i];
    std::size_t index = 0;
    if (const auto br = name.find('['); br != std::string::npos) {
      if (name.back() != ']') throw ParseError(0, "bad override path segment '" + name + "'");
      index = std::stoul(name.substr(br + 1, name.size() - br - 2));
      name = name.substr(0, br);
    }
    std::size_t seen = 0;
    ConfigNode* found = nullptr;
    for (auto& sec : node->sections) {
      if (sec.name == name && seen++ == index) {
        found = &sec.body;
        break;
      }
    }
    if (!found) {
      if (seen != index) {
        throw ParseError(0, "override path '" + path + "': no " + name + "[" + std::to_string(index) + "]");
      }
      node->sections.push_back({name, {}, 0});
      found = &node->sections.back().body;
    }
    node = found;
  }
  const std::string& key = parts.back();
  for (auto& leaf : node->leaves) {
    if (leaf.key == key) {
      leaf.value = value;
      return;
    }
  }
  node->leaves.push_back({key, value, 0});
}

// ---------------------------------------------------------------------------
// Values

namespace {

struct Unit {
  std::string_view suffix;
  std::int64_t scale;
};

std::int64_t parse_scaled(std::string_view v, std::initializer_list<Unit> units, std::string_view what) {
  std::size_t i = 0;
  bool neg = false;
  if (i < v.size() && (v[i] == '-' || v[i] == '+')) neg = v[i++] == '-';
  std::string int_digits;
  std::string frac_digits;
  while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) int_digits += v[i++];
  if (i < v.size() && v[i] == '.') {
    ++i;
    while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) frac_digits += v[i++];
  }
  if (int_digits.empty() && frac_digits.empty()) {
    throw Error(ErrorCode::ConfigError, "bad " + std::string(what) + " '" + std::string(v) + "'");
  }
  const std::string_view suffix = v.substr(i);
  std::int64_t scale = 0;
  for (const auto& u : units) {
    if (u.suffix == suffix) scale = u.scale;
  }
  if (scale == 0) {
    throw Error(ErrorCode::ConfigError,
                "bad unit '" + std::string(suffix) + "' in " + std::string(what) + " '" + std::string(v) + "'");
  }
  Int128 whole = 0;
  for (char c : int_digits) {
    whole = whole * 10 + (c - '0');
    if (whole > std::numeric_limits<std::int64_t>::max()) {
      throw Error(ErrorCode::ConfigError, std::string(what) + " out of range");
    }
  }
  whole *= scale;
  Int128 frac = 0;
  Int128 denom = 1;
  for (char c : frac_digits) {
    frac = frac * 10 + (c - '0');
    denom *= 10;
    if (denom > Int128{1} << 100) break;
  }
  frac *= scale;
  if (frac % denom != 0) {
    throw Error(ErrorCode::ConfigError, std::string(what) + " '" + std::string(v) + "' is not a whole number of base units");
  }
  const Int128 total = whole + frac / denom;
  if (total > std::numeric_limits<std::int64_t>::max()) {
    throw Error(ErrorCode::ConfigError, std::string(what) + " out of range");
  }
  return neg ? -static_cast<std::int64_t>(total) : static_cast<std::int64_t>(total);
}

}  // namespace

TimeNs parse_duration(std::string_view v) {
  if (v == "0") return 0;
  return parse_scaled(v, {{"ns", 1}, {"us", kNsPerUs}, {"ms", kNsPerMs}, {"s", kNsPerS}}, "duration");
}

std::int64_t parse_frequency(std::string_view v) {
  return parse_scaled(v, {{"Hz", 1}, {"kHz", 1'000}, {"MHz", 1'000'000}, {"GHz", 1'000'000'000}}, "frequency");
}

std::int64_t parse_rate(std::string_view v) {
  return parse_scaled(v, {{"bps", 1}, {"kbps", 1'000}, {"Mbps", 1'000'000}, {"Gbps", 1'000'000'000}}, "rate");
}

DecodeLatency parse_decode_latency(std::string_view v) {
  const auto x = v.find("xslot");
  if (x != std::string_view::npos && x + 5 == v.size()) {
    const std::string digits(v.substr(0, x));
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorCode::ConfigError, "bad slot multiple '" + std::string(v) + "'");
    }
    return DecodeLatency::slots(std::stoi(digits));
  }
  return DecodeLatency::fixed(parse_duration(v));
}

std::string format_decode_latency(const DecodeLatency& d) {
  if (d.mode == DecodeLatency::Mode::SlotMultiple) return std::to_string(d.slot_multiple) + "xslot";
  return std::to_string(d.fixed_ns) + "ns";
}

// ---------------------------------------------------------------------------
// Tree -> Scenario

namespace {

/// Strict accessor: every leaf and section must be consumed exactly once.
class Reader {
 public:
  explicit Reader(const ConfigNode& node, std::string where) : node_(node), where_(std::move(where)) {
    std::set<std::string> keys;
    for (const auto& l : node.leaves) {
      if (!keys.insert(l.key).second) throw ParseError(l.line, "duplicate key '" + l.key + "' in " + where_);
    }
    used_leaves_.assign(node.leaves.size(), false);
    used_sections_.assign(node.sections.size(), false);
  }

  const ConfigNode::Leaf* leaf(std::string_view key) {
    for (std::size_t i = 0; i < node_.leaves.size(); ++i) {
      if (node_.leaves[i].key == key) {
        used_leaves_[i] = true;
        return &node_.leaves[i];
      }
    }
    return nullptr;
  }

  std::vector<const ConfigNode::Section*> sections(std::string_view name) {
    std::vector<const ConfigNode::Section*> out;
    for (std::size_t i = 0; i < node_.sections.size(); ++i) {
      if (node_.sections[i].name == name) {
        used_sections_[i] = true;
        out.push_back(&node_.sections[i]);
      }
    }
    return out;
  }

  const ConfigNode::Section* section(std::string_view name) {
    auto all = sections(name);
    if (all.size() > 1) throw ParseError(all[1]->line, "section '" + std::string(name) + "' repeated in " + where_);
    return all.empty() ? nullptr : all.front();
  }

  template <typename F>
  void with(std::string_view key, F&& convert) {
    if (const auto* l = leaf(key)) {
      try {
        convert(l->value);
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception& e) {
        throw ParseError(l->line, where_ + "." + std::string(key) + ": " + e.what());
      }
    }
  }

  void finish() const {
    for (std::size_t i = 0; i < node_.leaves.size(); ++i) {
      if (!used_leaves_[i]) {
        throw ParseError(node_.leaves[i].line, "unknown key '" + node_.leaves[i].key + "' in " + where_);
      }
    }
    for (std::size_t i = 0; i < node_.sections.size(); ++i) {
      if (!used_sections_[i]) {
        throw ParseError(node_.sections[i].line,
                         "unknown section '" + node_.sections[i].name + "' in " + where_);
      }
    }
  }

  const std::string& where() const { return where_; }

 private:
  const ConfigNode& node_;
  std::string where_;
  std::vector<bool> used_leaves_;
  std::vector<bool> used_sections_;
};

double to_double(const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) throw std::invalid_argument("not a number: '" + v + "'");
  return d;
}

std::int64_t to_int(const std::string& v) {
  std::size_t pos = 0;
  const long long x = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not an integer: '" + v + "'");
  return x;
}

template <typename E>
E to_enum(const std::string& v, std::initializer_list<std::pair<std::string_view, E>> options) {
  std::string upper;
  for (char c : v) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  std::string names;
  for (const auto& [name, value] : options) {
    if (upper == name) return value;
    names += (names.empty() ? "" : "|") + std::string(name);
  }
  throw std::invalid_argument("'" + v + "' is not one of " + names);
}

void read_timing(Reader& r, PhyTimingConfig& t) {
  bool mac_to_phy_given = false;
  r.with("l1l2_ctrl_latency", [&](const std::string& v) { t.l1l2_ctrl_latency = static_cast<int>(to_int(v)); });
  r.with("l1l2_data_latency", [&](const std::string& v) { t.l1l2_data_latency = static_cast<int>(to_int(v)); });
  r.with("k2", [&](const std::string& v) { t.k2 = static_cast<int>(to_int(v)); });
  r.with("mac_to_phy_delay", [&](const std::string& v) {
    t.mac_to_phy_delay = static_cast<int>(to_int(v));
    mac_to_phy_given = true;
  });
  r.with("ue_decode_latency", [&](const std::string& v) { t.ue_decode_latency = parse_decode_latency(v); });
  if (!mac_to_phy_given) t.mac_to_phy_delay = t.l1l2_data_latency;
  r.finish();
}

void read_policy(Reader& r, PolicyConfig& p) {
  r.with("access", [&](const std::string& v) {
    p.access = to_enum<AccessMode>(v, {{"TDMA", AccessMode::TDMA}, {"OFDMA", AccessMode::OFDMA}});
  });
  r.with("scheduler", [&](const std::string& v) {
    p.policy = to_enum<SchedPolicy>(v, {{"RR", SchedPolicy::RR}, {"PF", SchedPolicy::PF}, {"MR", SchedPolicy::MR}});
  });
  r.with("alpha", [&](const std::string& v) { p.alpha = to_double(v); });
  r.with("beam_mode", [&](const std::string& v) {
    p.beam_mode = to_enum<BeamMode>(v, {{"LOAD", BeamMode::LOAD}, {"RR", BeamMode::RR}});
  });
  r.finish();
}

BwpConfig read_part(const ConfigNode::Section& sec, std::size_t index, std::vector<ValidationIssue>& issues) {
  Reader r(sec.body, "deployment.parts[" + std::to_string(index) + "]");
  BwpConfig p;
  p.bwp_id = static_cast<int>(index);
  r.with("id", [&](const std::string& v) { p.bwp_id = static_cast<int>(to_int(v)); });
  r.with("mu", [&](const std::string& v) {
    try {
      p.mu = Numerology(static_cast<int>(to_int(v)));
    } catch (const Error& e) {
      issues.push_back({e.code(), r.where() + ": " + e.what()});
    }
  });
  r.with("bandwidth", [&](const std::string& v) { p.bandwidth_hz = parse_frequency(v); });
  r.with("offset", [&](const std::string& v) { p.offset_hz = parse_frequency(v); });
  r.with("tx_power_dbm", [&](const std::string& v) { p.tx_power_dbm = to_double(v); });
  r.with("cp", [&](const std::string& v) {
    enum class Cp { Normal, Extended };
    if (to_enum<Cp>(v, {{"NORMAL", Cp::Normal}, {"EXTENDED", Cp::Extended}}) == Cp::Extended) {
      issues.push_back({ErrorCode::ConfigError, r.where() + ": extended cyclic prefix is not supported"});
    }
  });
  if (const auto* s = r.section("policy")) {
    Reader pr(s->body, r.where() + ".policy");
    read_policy(pr, p.policy);
  }
  if (const auto* s = r.section("timing")) {
    Reader tr(s->body, r.where() + ".timing");
    read_timing(tr, p.timing);
  }
  r.finish();
  return p;
}

}  // namespace

Scenario build_scenario(const ConfigNode& root, const std::string& base_dir) {
  Scenario s;
  std::vector<ValidationIssue> issues;
  auto issue = [&](ErrorCode c, std::string msg) { issues.push_back({c, std::move(msg)}); };
  Reader r(root, "scenario");

  r.with("seed", [&](const std::string& v) { s.seed = static_cast<std::uint64_t>(to_int(v)); });
  r.with("stop", [&](const std::string& v) { s.stop = parse_duration(v); });
  r.with("mcs_table", [&](const std::string& v) {
    s.mcs_table_path = v;
    std::filesystem::path p(v);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    s.mcs_table = load_mcs_table(p.string());
  });

  if (const auto* sec = r.section("channel")) {
    Reader c(sec->body, "channel");
    c.with("ref_distance_m", [&](const std::string& v) { s.channel.ref_distance_m = to_double(v); });
    c.with("ref_loss_db", [&](const std::string& v) { s.channel.ref_loss_db = to_double(v); });
    c.with("exponent", [&](const std::string& v) { s.channel.exponent = to_double(v); });
    c.with("noise_dbm", [&](const std::string& v) { s.channel.noise_dbm = to_double(v); });
    c.with("interference_dbm", [&](const std::string& v) { s.channel.interference_dbm = to_double(v); });
    c.with("ue_tx_power_dbm", [&](const std::string& v) { s.channel.ue_tx_power_dbm = to_double(v); });
    c.finish();
  }
  if (const auto* sec = r.section("error_model")) {
    Reader e(sec->body, "error_model");
    e.with("mode", [&](const std::string& v) {
      s.error_model.mode = to_enum<ErrorModel::Mode>(
          v, {{"NONE", ErrorModel::Mode::None},
              {"BERNOULLI", ErrorModel::Mode::Bernoulli},
              {"THRESHOLD", ErrorModel::Mode::Threshold}});
    });
    e.with("p", [&](const std::string& v) { s.error_model.p = to_double(v); });
    e.finish();
  }
  if (const auto* sec = r.section("core")) {
    Reader c(sec->body, "core");
    c.with("latency", [&](const std::string& v) { s.core.latency = parse_duration(v); });
    c.with("capacity", [&](const std::string& v) { s.core.capacity_bps = parse_rate(v); });
    c.finish();
  }
  if (const auto* sec = r.section("trace")) {
    Reader t(sec->body, "trace");
    t.with("slots", [&](const std::string& v) {
      s.trace_slots = to_enum<TraceSlots>(
          v, {{"ACTIVE", TraceSlots::Active}, {"ALL", TraceSlots::All}, {"NONE", TraceSlots::None}});
    });
    t.finish();
  }
  if (const auto* sec = r.section("placement")) {
    Reader p(sec->body, "placement");
    p.with("min_distance_m", [&](const std::string& v) { s.placement.min_distance_m = to_double(v); });
    p.with("max_distance_m", [&](const std::string& v) { s.placement.max_distance_m = to_double(v); });
    p.finish();
  }
  if (const auto* sec = r.section("deployment")) {
    Reader d(sec->body, "deployment");
    d.with("total_bandwidth", [&](const std::string& v) { s.deployment.total_bandwidth_hz = parse_frequency(v); });
    const auto parts = d.sections("parts");
    for (std::size_t i = 0; i < parts.size(); ++i) s.deployment.parts.push_back(read_part(*parts[i], i, issues));
    const auto routes = d.sections("routes");
    for (std::size_t i = 0; i < routes.size(); ++i) {
      Reader rr(routes[i]->body, "deployment.routes[" + std::to_string(i) + "]");
      std::string cls;
      int bwp = -1;
      rr.with("class", [&](const std::string& v) { cls = v; });
      rr.with("bwp", [&](const std::string& v) { bwp = static_cast<int>(to_int(v)); });
      rr.finish();
      if (cls.empty()) {
        issue(ErrorCode::ConfigError, rr.where() + ": missing class");
      } else if (!s.deployment.routing.emplace(cls, bwp).second) {
        issue(ErrorCode::ConfigError, rr.where() + ": class " + cls + " routed twice");
      }
    }
    d.finish();
  } else {
    issue(ErrorCode::ConfigError, "missing deployment section");
  }

  for (const auto* sec : r.sections("qos")) {
    Reader q(sec->body, "qos");
    QosClass c;
    q.with("id", [&](const std::string& v) { c.id = v; });
    q.with("label", [&](const std::string& v) { c.label = v; });
    q.finish();
    if (c.id.empty()) issue(ErrorCode::ConfigError, "qos section without id");
    if (c.label.empty()) c.label = c.id;
    s.classes.push_back(std::move(c));
  }

  const auto ue_secs = r.sections("ues");
  for (std::size_t i = 0; i < ue_secs.size(); ++i) {
    Reader u(ue_secs[i]->body, "ues[" + std::to_string(i) + "]");
    UeSpec ue;
    ue.id = static_cast<UeId>(i + 1);
    u.with("id", [&](const std::string& v) { ue.id = static_cast<UeId>(to_int(v)); });
    u.with("distance_m", [&](const std::string& v) { ue.distance_m = to_double(v); });
    u.with("beam", [&](const std::string& v) { ue.beam = static_cast<int>(to_int(v)); });
    u.finish();
    s.ues.push_back(ue);
  }

  const auto flow_secs = r.sections("flows");
  for (std::size_t i = 0; i < flow_secs.size(); ++i) {
    Reader f(flow_secs[i]->body, "flows[" + std::to_string(i) + "]");
    FlowSpec fl;
    fl.id = static_cast<std::uint32_t>(i + 1);
    f.with("id", [&](const std::string& v) { fl.id = static_cast<std::uint32_t>(to_int(v)); });
    f.with("ue", [&](const std::string& v) { fl.ue = static_cast<UeId>(to_int(v)); });
    f.with("direction", [&](const std::string& v) {
      fl.direction = to_enum<Direction>(v, {{"DL", Direction::DL}, {"UL", Direction::UL}});
    });
    f.with("class", [&](const std::string& v) { fl.qos = v; });
    f.with("generator", [&](const std::string& v) {
      fl.generator = to_enum<GeneratorKind>(v, {{"CBR", GeneratorKind::CBR}, {"ONOFF", GeneratorKind::ONOFF}});
    });
    f.with("rate", [&](const std::string& v) { fl.rate_bps = parse_rate(v); });
    f.with("size", [&](const std::string& v) { fl.size_bytes = to_int(v); });
    f.with("start", [&](const std::string& v) { fl.start = parse_duration(v); });
    f.with("stop", [&](const std::string& v) { fl.stop = parse_duration(v); });
    f.with("on", [&](const std::string& v) { fl.on = parse_duration(v); });
    f.with("off", [&](const std::string& v) { fl.off = parse_duration(v); });
    f.finish();
    s.flows.push_back(std::move(fl));
  }
  r.finish();

  // Semantic checks, all collected.
  if (s.stop <= 0) issue(ErrorCode::ConfigError, "stop must be positive");
  if (!(s.channel.ref_distance_m > 0)) issue(ErrorCode::ConfigError, "channel.ref_distance_m must be positive");
  if (!(s.channel.exponent > 0)) issue(ErrorCode::ConfigError, "channel.exponent must be positive");
  if (s.error_model.p < 0 || s.error_model.p > 1) issue(ErrorCode::ConfigError, "error_model.p outside [0,1]");
  if (s.core.latency < 0) issue(ErrorCode::ConfigError, "core.latency must be >= 0");
  if (s.core.capacity_bps <= 0) issue(ErrorCode::ConfigError, "core.capacity must be positive");
  if (!(s.placement.min_distance_m > 0) || s.placement.max_distance_m < s.placement.min_distance_m) {
    issue(ErrorCode::NonPositiveDistance, "placement needs 0 < min_distance_m <= max_distance_m");
  }

  std::set<std::string> class_ids;
  for (const auto& c : s.classes) class_ids.insert(c.id);
  for (const auto& f : s.flows) {
    if (!f.qos.empty() && class_ids.insert(f.qos).second) s.classes.push_back({f.qos, f.qos});
  }

  std::set<UeId> ue_ids;
  for (const auto& u : s.ues) {
    if (!ue_ids.insert(u.id).second) issue(ErrorCode::ConfigError, "duplicate ue id " + std::to_string(u.id));
    if (u.distance_m && !(*u.distance_m > 0)) {
      issue(ErrorCode::NonPositiveDistance, "ue " + std::to_string(u.id) + " distance must be positive");
    }
  }
  std::set<std::uint32_t> flow_ids;
  for (const auto& f : s.flows) {
    const std::string where = "flow " + std::to_string(f.id);
    if (!flow_ids.insert(f.id).second) issue(ErrorCode::ConfigError, "duplicate " + where);
    if (!ue_ids.count(f.ue)) issue(ErrorCode::ConfigError, where + ": unknown ue " + std::to_string(f.ue));
    if (f.qos.empty()) issue(ErrorCode::ConfigError, where + ": missing class");
    if (f.rate_bps <= 0) issue(ErrorCode::ConfigError, where + ": rate must be positive");
    if (f.size_bytes <= 0) issue(ErrorCode::ConfigError, where + ": size must be positive");
    if (f.start < 0) issue(ErrorCode::ConfigError, where + ": start must be >= 0");
    if (f.stop && *f.stop <= f.start) issue(ErrorCode::ConfigError, where + ": stop must exceed start");
    if (f.generator == GeneratorKind::ONOFF && (f.on <= 0 || f.off < 0)) {
      issue(ErrorCode::ConfigError, where + ": ONOFF needs on > 0 and off >= 0");
    }
  }

  validate_deployment(s.deployment, s.classes, issues);
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return s;
}

Scenario parse_scenario(std::string_view text, const std::vector<std::string>& overrides,
                        const std::string& base_dir) {
  ConfigNode root = parse_config(text);
  for (const auto& o : overrides) apply_override(root, o);
  return build_scenario(root, base_dir);
}

Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open scenario " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_scenario(buf.str(), overrides, dir.empty() ? "." : dir);
}

// ---------------------------------------------------------------------------
// Scenario -> canonical text

namespace {

std::string real(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quoted(const std::string& v) { return "\"" + v + "\""; }

}  // namespace

std::string emit_scenario(const Scenario& s) {
  std::ostringstream o;
  o << "seed = " << s.seed << "\n";
  o << "stop = " << s.stop << "ns\n";
  if (!s.mcs_table_path.empty()) o << "mcs_table = " << quoted(s.mcs_table_path) << "\n";
  o << "channel {\n"
    << "  ref_distance_m = " << real(s.channel.ref_distance_m) << "\n"
    << "  ref_loss_db = " << real(s.channel.ref_loss_db) << "\n"
    << "  exponent = " << real(s.channel.exponent) << "\n"
    << "  noise_dbm = " << real(s.channel.noise_dbm) << "\n"
    << "  interference_dbm = " << real(s.channel.interference_dbm) << "\n"
    << "  ue_tx_power_dbm = " << real(s.channel.ue_tx_power_dbm) << "\n"
    << "}\n";
  const char* mode = s.error_model.mode == ErrorModel::Mode::None        ? "none"
                     : s.error_model.mode == ErrorModel::Mode::Bernoulli ? "bernoulli"
                                                                         : "threshold";
  o << "error_model {\n  mode = " << mode << "\n  p = " << real(s.error_model.p) << "\n}\n";
  o << "core {\n  latency = " << s.core.latency << "ns\n  capacity = " << s.core.capacity_bps << "bps\n}\n";
  o << "trace {\n  slots = " << to_string(s.trace_slots) << "\n}\n";
  o << "placement {\n  min_distance_m = " << real(s.placement.min_distance_m)
    << "\n  max_distance_m = " << real(s.placement.max_distance_m) << "\n}\n";
  o << "deployment {\n  total_bandwidth = " << s.deployment.total_bandwidth_hz << "Hz\n";
  for (const auto& p : s.deployment.parts) {
    o << "  parts {\n"
      << "    id = " << p.bwp_id << "\n"
      << "    mu = " << p.mu.value() << "\n"
      << "    bandwidth = " << p.bandwidth_hz << "Hz\n";
    if (p.offset_hz) o << "    offset = " << *p.offset_hz << "Hz\n";
    o << "    tx_power_dbm = " << real(p.tx_power_dbm) << "\n"
      << "    policy {\n"
      << "      access = " << to_string(p.policy.access) << "\n"
      << "      scheduler = " << to_string(p.policy.policy) << "\n"
      << "      alpha = " << real(p.policy.alpha) << "\n"
      << "      beam_mode = " << to_string(p.policy.beam_mode) << "\n"
      << "    }\n"
      << "    timing {\n"
      << "      l1l2_ctrl_latency = " << p.timing.l1l2_ctrl_latency << "\n"
      << "      l1l2_data_latency = " << p.timing.l1l2_data_latency << "\n"
      << "      k2 = " << p.timing.k2 << "\n"
      << "      mac_to_phy_delay = " << p.timing.mac_to_phy_delay << "\n"
      << "      ue_decode_latency = " << format_decode_latency(p.timing.ue_decode_latency) << "\n"
      << "    }\n"
      << "  }\n";
  }
  for (const auto& [cls, bwp] : s.deployment.routing) {
    o << "  routes { class = " << quoted(cls) << " bwp = " << bwp << " }\n";
  }
  o << "}\n";
  for (const auto& c : s.classes) o << "qos { id = " << quoted(c.id) << " label = " << quoted(c.label) << " }\n";
  for (const auto& u : s.ues) {
    o << "ues { id = " << u.id;
    if (u.distance_m) o << " distance_m = " << real(*u.distance_m);
    o << " beam = " << u.beam << " }\n";
  }
  for (const auto& f : s.flows) {
    o << "flows {\n"
      << "  id = " << f.id << "\n"
      << "  ue = " << f.ue << "\n"
      << "  direction = " << to_string(f.direction) << "\n"
      << "  class = " << quoted(f.qos) << "\n"
      << "  generator = " << to_string(f.generator) << "\n"
      << "  rate = " << f.rate_bps << "bps\n"
      << "  size = " << f.size_bytes << "\n"
      << "  start = " << f.start << "ns\n";
    if (f.stop) o << "  stop = " << *f.stop << "ns\n";
    if (f.generator == GeneratorKind::ONOFF) {
      o << "  on = " << f.on << "ns\n  off = " << f.off << "ns\n";
    }
    o << "}\n";
  }
  return o.str();
}

std::uint64_t scenario_hash(const Scenario& s) { return fnv1a64(emit_scenario(s)); }

}  // namespace nrsim

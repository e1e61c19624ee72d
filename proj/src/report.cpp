#include "nrsim/report.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "nrsim/error.hpp"
#include "nrsim/frame.hpp"

namespace nrsim {

std::string format_number(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace {

std::string json_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

std::string integer(double v) { return std::to_string(std::llround(v)); }

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string format_summary_json(const RunResult& r, const Scenario& s) {
  std::ostringstream o;
  o << "{\n";
  o << "  \"metadata\": {\n"
    << "    \"seed\": " << s.seed << ",\n"
    << "    \"scenario_hash\": " << json_string(hex64(scenario_hash(s))) << ",\n"
    << "    \"stop_ns\": " << s.stop << ",\n"
    << "    \"events\": " << r.events << "\n"
    << "  },\n";
  o << "  \"flows\": [";
  for (std::size_t i = 0; i < r.flows.size(); ++i) {
    const auto& f = r.flows[i];
    o << (i ? ",\n" : "\n") << "    {"
      << "\"flow_id\": " << f.flow_id << ", "
      << "\"class\": " << json_string(f.qos) << ", "
      << "\"delivered_bytes\": " << f.delivered_bytes << ", "
      << "\"goodput_bps\": " << format_number(f.goodput_bps()) << ", "
      << "\"delay_mean_ns\": " << integer(f.delay_mean_ns()) << ", "
      << "\"delay_p80_ns\": " << f.delay_p80_ns() << ", "
      << "\"delay_min_ns\": " << f.delay_min_ns() << ", "
      << "\"delay_max_ns\": " << f.delay_max_ns() << ", "
      << "\"sr_count\": " << f.sr_count << ", "
      << "\"direction\": " << json_string(to_string(f.direction)) << ", "
      << "\"ue\": " << f.ue << ", "
      << "\"generated_bytes\": " << f.generated_bytes << ", "
      << "\"buffered_bytes\": " << f.buffered_bytes << ", "
      << "\"in_flight_bytes\": " << f.in_flight_bytes << ", "
      << "\"dropped_bytes\": " << f.dropped_bytes << ", "
      << "\"empty\": " << (f.empty() ? "true" : "false") << "}";
  }
  o << (r.flows.empty() ? "],\n" : "\n  ],\n");
  o << "  \"classes\": [";
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    const auto& c = r.classes[i];
    o << (i ? ",\n" : "\n") << "    {"
      << "\"class\": " << json_string(c.qos) << ", "
      << "\"flows\": " << c.flows << ", "
      << "\"delay_geo_mean_ns\": " << integer(c.delay_geo_mean_ns) << ", "
      << "\"goodput_geo_mean_bps\": " << format_number(c.goodput_geo_mean_bps) << ", "
      << "\"empty_flows\": [";
    for (std::size_t k = 0; k < c.empty_flows.size(); ++k) o << (k ? ", " : "") << c.empty_flows[k];
    o << "]}";
  }
  o << (r.classes.empty() ? "]\n" : "\n  ]\n");
  o << "}\n";
  return o.str();
}

std::string format_frame_table(const std::vector<int>& mus, std::int64_t bandwidth_hz) {
  std::ostringstream o;
  o << "mu,scs_khz,slots_per_subframe,slot_us,symbols_per_slot,symbol_us,useful_symbol_us,cp_us,"
       "subcarriers_per_prb,prb_width_khz,prb_count,rbg_size,rbg_count\n";
  for (int m : mus) {
    const auto fs = derive_frame_structure(Numerology(m), bandwidth_hz);
    const double slot_us = static_cast<double>(fs.slot_duration) / kNsPerUs;
    const double symbol_us = slot_us / fs.symbols_per_slot;
    const double useful_us = 1e6 / static_cast<double>(fs.scs_hz);
    o << m << ',' << format_number(fs.scs_hz / 1000.0) << ',' << fs.slots_per_subframe << ','
      << format_number(slot_us) << ',' << fs.symbols_per_slot << ',' << format_number(symbol_us) << ','
      << format_number(useful_us) << ',' << format_number(symbol_us - useful_us) << ','
      << fs.subcarriers_per_prb << ',' << format_number(fs.scs_hz * fs.subcarriers_per_prb / 1000.0) << ','
      << fs.prb_count << ',' << fs.rbg_size << ',' << fs.rbg_count << '\n';
  }
  return o.str();
}

std::vector<SweepAxis> parse_grid(std::string_view spec) {
  std::vector<SweepAxis> axes;
  std::string s(spec);
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ';');) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::ConfigError, "grid axis '" + part + "' needs key=v1,v2");
    SweepAxis axis{part.substr(0, eq), {}};
    std::stringstream vs(part.substr(eq + 1));
    for (std::string v; std::getline(vs, v, ',');) {
      if (!v.empty()) axis.values.push_back(v);
    }
    if (axis.values.empty()) throw Error(ErrorCode::ConfigError, "grid axis '" + axis.key + "' has no values");
    axes.push_back(std::move(axis));
  }
  return axes;
}

std::vector<std::vector<std::string>> expand_grid(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<std::string>> out{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& prefix : out) {
      for (const auto& v : axis.values) {
        auto p = prefix;
        p.push_back(axis.key + "=" + v);
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<SweepPoint> run_sweep(const std::string& scenario_path, const std::vector<SweepAxis>& axes,
                                  const std::vector<std::string>& base_overrides, const std::string& out_dir,
                                  int jobs, bool write_traces) {
  const auto grid = expand_grid(axes);
  std::vector<SweepPoint> points(grid.size());
  std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", i);
    points[i].dir = (std::filesystem::path(out_dir) / name).string();
    points[i].overrides = base_overrides;
    points[i].overrides.insert(points[i].overrides.end(), grid[i].begin(), grid[i].end());
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      SweepPoint& p = points[i];
      try {
        const Scenario s = load_scenario(scenario_path, p.overrides);
        p.seed = s.seed;
        std::filesystem::create_directories(p.dir);
        if (write_traces) {
          std::ofstream trace(std::filesystem::path(p.dir) / "trace.csv");
          p.result = run(s, &trace);
        } else {
          p.result = run(s);
        }
        std::ofstream(std::filesystem::path(p.dir) / "summary.json") << format_summary_json(p.result, s);
      } catch (const std::exception& e) {
        p.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ofstream index(std::filesystem::path(out_dir) / "sweep.csv");
  index << "run,overrides,class,delay_geo_mean_ns,goodput_geo_mean_bps,error\n";
  // Points that differ only in the seed share a key.
  std::map<std::string, std::map<std::string, std::vector<double>>> by_point;
  std::vector<std::string> point_order;
  for (const auto& p : points) {
    std::string joined;
    std::string key;
    for (const auto& o : p.overrides) {
      joined += (joined.empty() ? "" : ";") + o;
      if (o.rfind("seed=", 0) != 0) key += (key.empty() ? "" : ";") + o;
    }
    const std::string run_name = std::filesystem::path(p.dir).filename().string();
    if (!p.error.empty()) {
      index << run_name << ",\"" << joined << "\",,,,\"" << p.error << "\"\n";
      continue;
    }
    if (!by_point.count(key)) point_order.push_back(key);
    auto& classes = by_point[key];
    for (const auto& c : p.result.classes) {
      index << run_name << ",\"" << joined << "\"," << c.qos << ',' << integer(c.delay_geo_mean_ns) << ','
            << format_number(c.goodput_geo_mean_bps) << ",\n";
      if (c.delay_geo_mean_ns > 0) classes[c.qos].push_back(c.delay_geo_mean_ns);
    }
  }
  std::ofstream seeds(std::filesystem::path(out_dir) / "sweep_seeds.csv");
  seeds << "point,class,seeds,delay_geo_mean_ns\n";
  for (const auto& key : point_order) {
    for (const auto& [cls, values] : by_point[key]) {
      seeds << '"' << key << "\"," << cls << ',' << values.size() << ',' << integer(geo_mean(values)) << '\n';
    }
  }
  return points;
}

}  // namespace nrsim

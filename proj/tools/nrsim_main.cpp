// nrsim command line: run, check, sweep, print-frame.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "nrsim/check.hpp"
#include "nrsim/engine.hpp"
#include "nrsim/error.hpp"
#include "nrsim/report.hpp"
#include "nrsim/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;

bool is_invariant(const nrsim::Error& e) {
  return e.code() == nrsim::ErrorCode::InvariantError || e.code() == nrsim::ErrorCode::OverlapError;
}

void print_validation(const nrsim::ValidationError& e) {
  std::cerr << "scenario rejected:\n";
  for (const auto& i : e.issues()) std::cerr << "  " << nrsim::to_string(i.code) << ": " << i.message << "\n";
}

int cmd_run(const std::string& path, const std::vector<std::string>& overrides, const std::string& out) {
  nrsim::Scenario s;
  try {
    s = nrsim::load_scenario(path, overrides);
  } catch (const nrsim::ValidationError& e) {
    print_validation(e);
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  try {
    std::filesystem::create_directories(out);
    std::ofstream trace(std::filesystem::path(out) / "trace.csv");
    const auto result = nrsim::run(s, &trace);
    std::ofstream(std::filesystem::path(out) / "summary.json") << nrsim::format_summary_json(result, s);
    std::cout << "wrote " << out << "/trace.csv (" << result.trace_rows << " rows) and " << out
              << "/summary.json\n";
  } catch (const nrsim::Error& e) {
    std::cerr << e.what() << "\n";
    return is_invariant(e) ? kExitInvariant : kExitConfig;
  }
  return kExitOk;
}

int cmd_check(const std::string& path) {
  std::vector<nrsim::Finding> findings;
  try {
    findings = nrsim::check_trace_file(path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  for (const auto& f : findings) std::cout << f.rule << " row " << f.row << ": " << f.message << "\n";
  std::cout << findings.size() << " finding(s)\n";
  return findings.empty() ? kExitOk : kExitInvariant;
}

int cmd_sweep(const std::string& path, const std::string& grid, const std::vector<std::string>& overrides,
              const std::string& out, int jobs, bool traces) {
  std::vector<nrsim::SweepAxis> axes;
  try {
    axes = nrsim::parse_grid(grid);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }
  const auto points = nrsim::run_sweep(path, axes, overrides, out, jobs, traces);
  int failed = 0;
  for (const auto& p : points) {
    if (!p.error.empty()) {
      ++failed;
      std::cerr << p.dir << ": " << p.error << "\n";
    }
  }
  std::cout << points.size() - failed << "/" << points.size() << " runs written under " << out << "\n";
  return failed ? kExitConfig : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slot-level 5G NR RAN timing simulator"};
  app.require_subcommand(1);

  std::string scenario;
  std::vector<std::string> overrides;
  std::string out = "out";

  auto* run = app.add_subcommand("run", "Run a scenario, write trace.csv and summary.json");
  run->add_option("scenario", scenario, "Scenario file")->required();
  run->add_option("--override,-o", overrides, "Dotted-path override key=value (repeatable)");
  run->add_option("--out", out, "Output directory")->capture_default_str();

  std::string trace_path;
  auto* check = app.add_subcommand("check", "Validate a trace; exit 2 on findings");
  check->add_option("trace", trace_path, "trace.csv")->required();

  std::string grid;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  bool no_traces = false;
  auto* sweep = app.add_subcommand("sweep", "Run a scenario over a parameter grid");
  sweep->add_option("scenario", scenario, "Scenario file")->required();
  sweep->add_option("--grid", grid, "Axes, e.g. \"seed=1,2;deployment.parts[0].mu=0,1\"")->required();
  sweep->add_option("--override,-o", overrides, "Override applied to every point (repeatable)");
  sweep->add_option("--out", out, "Output directory")->capture_default_str();
  sweep->add_option("--jobs,-j", jobs, "Concurrent runs")->capture_default_str();
  sweep->add_flag("--no-traces", no_traces, "Write summaries only");

  int mu = -1;
  std::string bw = "100MHz";
  auto* frame = app.add_subcommand("print-frame", "Dump the frame structure per numerology");
  frame->add_option("--mu", mu, "Numerology 0..5 (all when omitted)");
  frame->add_option("--bw", bw, "Bandwidth, e.g. 40MHz")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*run) return cmd_run(scenario, overrides, out);
  if (*check) return cmd_check(trace_path);
  if (*sweep) return cmd_sweep(scenario, grid, overrides, out, jobs, !no_traces);
  if (*frame) {
    try {
      std::vector<int> mus;
      if (mu >= 0 || app.get_subcommand("print-frame")->count("--mu")) {
        mus.push_back(mu);
      } else {
        for (int m = 0; m <= nrsim::kMaxNumerology; ++m) mus.push_back(m);
      }
      std::cout << nrsim::format_frame_table(mus, nrsim::parse_frequency(bw));
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return kExitConfig;
    }
  }
  return kExitOk;
}

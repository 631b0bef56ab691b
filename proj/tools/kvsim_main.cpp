#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "kvsim/config.hpp"
#include "kvsim/errors.hpp"
#include "kvsim/harness.hpp"

namespace {

// 0: every criterion passed, 1: some check failed, 2: usage, configuration or I/O error.
constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw kvsim::IoError(fmt::format("cannot open {}", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int finish(const kvsim::AggregateReport& agg, const std::filesystem::path& root) {
  kvsim::print_report(std::cout, agg);
  std::cout << fmt::format("{} experiment(s), {} failed; outputs in {}\n", agg.reports.size(), agg.failures(),
                           root.string());
  return agg.pass() ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kelvin-Voigt spectral simulator and verification harness"};
  app.require_subcommand(1);
  app.footer(fmt::format("Outputs go below ${} (default ./kvsim_output).", kvsim::kOutputRootVariable));

  std::string config_path, sweep_path, report_dir;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  auto* run = app.add_subcommand("run", "Run every experiment of a configuration file");
  run->add_option("config", config_path, "Configuration file")->required();
  auto* sweep = app.add_subcommand("sweep", "Expand {a, b} sets into a Cartesian sweep and run it in parallel");
  sweep->add_option("config", sweep_path, "Sweep configuration file")->required();
  sweep->add_option("-j,--jobs", jobs, "Experiments in flight")->check(CLI::PositiveNumber);
  auto* oracles = app.add_subcommand("verify-oracles", "Run the closed-form oracle experiments");
  oracles->add_option("-j,--jobs", jobs, "Experiments in flight")->check(CLI::PositiveNumber);
  auto* report = app.add_subcommand("report", "Summarize the verdicts found below a directory");
  report->add_option("dir", report_dir, "Output directory to scan")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kError;
  }

  try {
    const std::filesystem::path root = kvsim::output_root();
    if (run->parsed()) {
      const auto specs = kvsim::parse_config(read_file(config_path));
      return finish(kvsim::run_specs(specs, root, 1), root);
    }
    if (sweep->parsed()) {
      const auto specs = kvsim::parse_sweep(read_file(sweep_path));
      return finish(kvsim::run_specs(specs, root, jobs), root);
    }
    if (oracles->parsed()) return finish(kvsim::verify_oracles(root, jobs), root / "oracles");
    if (report->parsed()) {
      const auto rows = kvsim::collect_verdicts(report_dir);
      bool all = true;
      for (const auto& c : kvsim::tally(rows)) {
        if (c.criterion == 0) continue;
        all = all && c.pass();
        std::cout << fmt::format("criterion {}: {} ({}/{} checks)\n", c.criterion, c.pass() ? "PASS" : "FAIL",
                                 c.passed, c.checks);
      }
      for (const auto& r : rows)
        if (!r.verdict.pass)
          std::cout << fmt::format("  failed: {} {} value {:.6e} tolerance {:.3e}\n", r.experiment, r.verdict.name,
                                   r.verdict.value, r.verdict.tolerance);
      return all ? kPass : kFail;
    }
  } catch (const kvsim::ConfigError& e) {
    std::cerr << fmt::format("configuration error (line {}): {}\n", e.line(), e.what());
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

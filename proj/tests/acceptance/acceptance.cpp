// Acceptance run: every criterion-bearing experiment with its default
// configuration, followed by a second identical run to check that all CSV
// output is byte-for-byte reproducible.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "kvsim/harness.hpp"

namespace fs = std::filesystem;
using namespace kvsim;

namespace {

std::vector<ExperimentSpec> acceptance_specs() {
  std::vector<ExperimentSpec> specs;
  for (ExperimentId id : {ExperimentId::Dispersion, ExperimentId::OscillationOracle, ExperimentId::WeakLimits,
                          ExperimentId::EnergyIdentity, ExperimentId::ModulatedInequality,
                          ExperimentId::GalerkinCauchy, ExperimentId::RegularityMonitor, ExperimentId::DDEquivalence,
                          ExperimentId::MMSConvergence})
    specs.push_back(default_spec(id, std::string(to_string(id))));
  return specs;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Reproducibility {
  int files = 0;
  std::vector<std::string> mismatches;
};

Reproducibility compare_csv(const fs::path& a, const fs::path& b) {
  Reproducibility r;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    const auto rel = fs::relative(e.path(), a);
    ++r.files;
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) r.mismatches.push_back(rel.generic_string());
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file() && e.path().extension() == ".csv" && !fs::exists(a / fs::relative(e.path(), b)))
      r.mismatches.push_back(fs::relative(e.path(), b).generic_string());
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : output_root("acceptance_output");
  fs::remove_all(root);
  const auto specs = acceptance_specs();

  const auto start = std::chrono::steady_clock::now();
  const AggregateReport first = run_specs(specs, root / "run1");
  const AggregateReport second = run_specs(specs, root / "run2");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::map<int, CriterionStatus> status;
  for (int c = 1; c <= 9; ++c) status[c].criterion = c;
  for (const auto& r : first.reports) {
    if (!r.error.empty()) {
      std::cout << fmt::format("{} aborted: {}\n", to_string(r.id), r.error);
      continue;
    }
    for (const auto& v : r.verdicts) {
      if (v.criterion < 1 || v.criterion > 9) continue;
      auto& s = status[v.criterion];
      ++s.checks;
      if (v.pass) ++s.passed;
      std::cout << fmt::format("  [{}] {} {}: value {:.6e} tolerance {:.3e} {}\n", v.criterion, v.pass ? "ok  " : "FAIL",
                               v.name, v.value, v.tolerance, v.detail);
    }
  }
  const Reproducibility rep = compare_csv(root / "run1", root / "run2");
  for (const auto& m : rep.mismatches) std::cout << fmt::format("  [10] differs: {}\n", m);

  bool all = true;
  std::cout << fmt::format("acceptance run took {:.1f} s (two passes)\n", seconds);
  for (const auto& [c, s] : status) {
    all = all && s.pass();
    std::cout << fmt::format("criterion {}: {} ({}/{} checks)\n", c, s.pass() ? "PASS" : "FAIL", s.passed, s.checks);
  }
  const bool c10 = rep.files > 0 && rep.mismatches.empty();
  all = all && c10;
  std::cout << fmt::format("criterion 10: {} ({} CSV files identical across runs, {} differ)\n", c10 ? "PASS" : "FAIL",
                           rep.files - static_cast<int>(rep.mismatches.size()), rep.mismatches.size());
  return all ? 0 : 1;
}

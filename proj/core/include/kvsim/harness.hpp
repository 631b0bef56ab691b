#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kvsim/experiments.hpp"

namespace kvsim {

/// Name of the environment variable holding the output root.
inline constexpr const char* kOutputRootVariable = "KVSIM_OUTPUT_ROOT";

/// $KVSIM_OUTPUT_ROOT when set and non-empty, else `fallback`.
std::filesystem::path output_root(const std::filesystem::path& fallback = "kvsim_output");

/// Directory of one experiment below the root. Labels of sweep members
/// ("base/3") become nested directories; characters outside [A-Za-z0-9._-/]
/// are replaced by '_'.
std::filesystem::path experiment_dir(const std::filesystem::path& root, const ExperimentSpec& spec);

struct AggregateReport {
  /// Sorted by experiment id, then configuration hash, then label.
  std::vector<ExperimentReport> reports;

  /// True when every experiment finished and all verdicts passed. An empty report passes.
  bool pass() const noexcept;
  std::size_t failures() const noexcept;
};

/// Runs the specs with up to `parallelism` experiments in flight. Exceptions
/// of individual experiments are recorded in ExperimentReport::error and do
/// not stop the others. Writes summary.csv (one row per verdict) and
/// runs.csv (one row per experiment, including derived parameters) in `root`.
AggregateReport run_specs(const std::vector<ExperimentSpec>& specs, const std::filesystem::path& root,
                          unsigned parallelism = 1);

/// Plain-text digest: one line per experiment and per criterion.
void print_report(std::ostream& out, const AggregateReport& report);

/// Runs the exact-oracle experiments (dispersion, oscillation_oracle,
/// weak_limits) with default settings below root/oracles.
AggregateReport verify_oracles(const std::filesystem::path& root, unsigned parallelism = 1);

/// One verdict row read back from a verdicts.csv file.
struct StoredVerdict {
  std::string experiment;  // directory of the verdicts file relative to the scanned root
  Verdict verdict;
};

/// Collects every verdicts.csv below `dir` (in path order), writes
/// dir/report.csv and returns the rows. Throws IoError if none is found.
std::vector<StoredVerdict> collect_verdicts(const std::filesystem::path& dir);

struct CriterionStatus {
  int criterion = 0;
  int checks = 0;
  int passed = 0;
  bool pass() const noexcept { return checks > 0 && passed == checks; }
};

/// Per-criterion tallies, in criterion order.
std::vector<CriterionStatus> tally(const std::vector<StoredVerdict>& rows);

}  // namespace kvsim

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kvsim {

enum class ExperimentId {
  EnergyIdentity,
  EnergyConservation,
  H1Propagation,
  ModulatedInequality,
  GalerkinCauchy,
  RegularityMonitor,
  Dispersion,
  OscillationOracle,
  WeakLimits,
  DDEquivalence,
  MMSConvergence,
};

std::string_view to_string(ExperimentId id) noexcept;
std::optional<ExperimentId> parse_experiment_id(std::string_view text) noexcept;
const std::vector<ExperimentId>& all_experiment_ids();

// ---------------------------------------------------------------------------
// Raw INI-style text: "[label]" section headers, "key = value" lines, '#' or
// ';' comments. Every error carries the 1-based line number.

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string label;
  int line = 0;
  std::vector<ConfigEntry> entries;
};

std::vector<ConfigSection> parse_ini(std::string_view text);

// ---------------------------------------------------------------------------

/// One validated experiment. `values` holds every key of the experiment's
/// schema in canonical text form, defaults included.
struct ExperimentSpec {
  ExperimentId id = ExperimentId::Dispersion;
  std::string label;
  std::map<std::string, std::string> values;

  std::uint64_t seed() const;
  /// Sorted "key = value" lines including the id; the basis of hash().
  std::string canonical() const;
  /// 64-bit FNV-1a of canonical().
  std::uint64_t hash() const;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<int> integers(const std::string& key) const;
  std::vector<std::string> texts(const std::string& key) const;
  /// Model parameters given as param_<name> keys.
  std::map<std::string, double, std::less<>> model_params() const;
};

/// Defaults of every schema key for the experiment.
ExperimentSpec default_spec(ExperimentId id, std::string label = {});

/// Parses a run configuration: one section per experiment, `id` required,
/// unknown keys and sweep sets rejected. Throws ConfigError with the line.
std::vector<ExperimentSpec> parse_config(std::string_view text);

/// Like parse_config, but a value written as "{a, b, ...}" is a sweep axis;
/// each section expands to the Cartesian product of its axes. Expanded
/// members get labels "<label>/<index>" in lexicographic axis order.
std::vector<ExperimentSpec> parse_sweep(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace kvsim

#include "kvsim/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <set>

#include <fmt/format.h>

#include "kvsim/diffusion_dispersion.hpp"
#include "kvsim/errors.hpp"
#include "kvsim/solver.hpp"
#include "kvsim/stored_energy.hpp"

namespace kvsim {

namespace {

constexpr std::array<std::pair<ExperimentId, std::string_view>, 11> kIdNames{{
    {ExperimentId::EnergyIdentity, "energy_identity"},
    {ExperimentId::EnergyConservation, "energy_conservation"},
    {ExperimentId::H1Propagation, "h1_propagation"},
    {ExperimentId::ModulatedInequality, "modulated_inequality"},
    {ExperimentId::GalerkinCauchy, "galerkin_cauchy"},
    {ExperimentId::RegularityMonitor, "regularity_monitor"},
    {ExperimentId::Dispersion, "dispersion"},
    {ExperimentId::OscillationOracle, "oscillation_oracle"},
    {ExperimentId::WeakLimits, "weak_limits"},
    {ExperimentId::DDEquivalence, "dd_equivalence"},
    {ExperimentId::MMSConvergence, "mms_convergence"},
}};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long> to_integer(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return v;
}

/// Splits "[a, b]" (or a bare scalar) into trimmed items.
std::vector<std::string> list_items(const std::string& value, char open = '[', char close = ']') {
  std::string body = value;
  if (!body.empty() && body.front() == open) {
    if (body.back() != close) throw Error(fmt::format("unterminated list '{}'", value));
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= body.size()) {
    const auto comma = body.find(',', start);
    const auto piece = trim(std::string_view(body).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (piece.empty()) {
      if (comma == std::string::npos && out.empty() && trim(body).empty()) break;
      throw Error(fmt::format("empty item in list '{}'", value));
    }
    out.push_back(piece);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw Error(fmt::format("empty list '{}'", value));
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string s = "[";
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i];
  return s + "]";
}

// ---------------------------------------------------------------------------
// Schema

enum class Kind {
  Positive,      // real > 0
  NonNegative,   // real >= 0
  Fraction,      // real in (0, 1)
  Count,         // integer >= 1
  Seed,          // integer >= 0
  SchemeName,
  ModelName,
  RootName,
  Threshold,     // "auto" or real > 0
  DecreasingPositiveList,
  IncreasingCountList,
  PositiveList,
  RealList,
  ModelList,
};

struct KeySpec {
  std::string_view key;
  Kind kind;
  std::string_view def;
};

using Schema = std::vector<KeySpec>;

Schema schema_for(ExperimentId id) {
  Schema s{{"seed", Kind::Seed, "0"}};
  const auto add = [&](std::initializer_list<KeySpec> more) { s.insert(s.end(), more); };
  switch (id) {
    case ExperimentId::EnergyIdentity:
    case ExperimentId::EnergyConservation:
      add({{"model", Kind::ModelName, "quartic"},
           {"dim", Kind::Count, "2"},
           {"N", Kind::Count, "64"},
           {"t_end", Kind::Positive, "1"},
           {"epsilon", Kind::Positive, "1"},
           {"amplitude", Kind::NonNegative, "0.5"},
           {"ladder", Kind::DecreasingPositiveList, "[0.02, 0.01, 0.005]"},
           {"cnab2_ladder", Kind::DecreasingPositiveList, "[0.002, 0.001, 0.0005]"},
           {"record_every", Kind::Count, "1"},
           {"cnab2_record_every", Kind::Count, "5"},
           {"tolerance", Kind::Positive, "1e-6"},
           {"rk4_min_order", Kind::Positive, "3.5"},
           {"cnab2_min_order", Kind::Positive, "1.8"},
           {"blowup_threshold", Kind::Threshold, "auto"}});
      break;
    case ExperimentId::H1Propagation:
    case ExperimentId::ModulatedInequality:
      add({{"models", Kind::ModelList, "[quadratic, quartic, double_well, piecewise]"},
           {"N", Kind::Count, "64"},
           {"t_end", Kind::Positive, "1"},
           {"epsilon", Kind::Positive, "1"},
           {"scheme", Kind::SchemeName, "IF_RK4"},
           {"dt", Kind::Positive, "0.005"},
           {"dt_1d", Kind::Positive, "0.001"},
           {"amplitude", Kind::NonNegative, "0.5"},
           {"record_every", Kind::Count, "1"},
           {"tolerance", Kind::Positive, "1e-6"},
           {"blowup_threshold", Kind::Threshold, "auto"}});
      break;
    case ExperimentId::GalerkinCauchy:
      add({{"model", Kind::ModelName, "quartic"},
           {"dim", Kind::Count, "2"},
           {"ladder", Kind::IncreasingCountList, "[8, 16, 32, 64, 128]"},
           {"scheme", Kind::SchemeName, "IF_RK4"},
           {"dt", Kind::Positive, "0.01"},
           {"t_end", Kind::Positive, "1"},
           {"epsilon", Kind::Positive, "1"},
           {"amplitude", Kind::NonNegative, "0.5"},
           {"rho", Kind::Fraction, "0.5"},
           {"record_every", Kind::Count, "10"},
           {"tolerance", Kind::Positive, "1e-8"},
           {"blowup_threshold", Kind::Threshold, "auto"}});
      break;
    case ExperimentId::RegularityMonitor:
      add({{"model", Kind::ModelName, "quartic"},
           {"dim", Kind::Count, "2"},
           {"N", Kind::Count, "32"},
           {"scheme", Kind::SchemeName, "IF_RK4"},
           {"dt", Kind::Positive, "0.01"},
           {"t_end", Kind::Positive, "1"},
           {"epsilon", Kind::Positive, "1"},
           {"amplitude", Kind::NonNegative, "0.5"},
           {"rho", Kind::Fraction, "0.5"},
           {"record_every", Kind::Count, "5"},
           {"max_ratio", Kind::Positive, "1e6"},
           {"blowup_threshold", Kind::Threshold, "auto"}});
      break;
    case ExperimentId::Dispersion:
      add({{"kappa", Kind::PositiveList, "[0.25, 1, 4]"},
           {"n_max", Kind::Count, "8"},
           {"scheme", Kind::SchemeName, "IF_RK4"},
           {"dt", Kind::Positive, "1e-5"},
           {"t_end", Kind::Positive, "1"},
           {"samples", Kind::Count, "100"},
           {"tolerance", Kind::Positive, "1e-6"},
           {"vieta_tolerance", Kind::Positive, "1e-13"}});
      break;
    case ExperimentId::OscillationOracle:
      add({{"a", Kind::Positive, "1"},
           {"b", Kind::Positive, "3"},
           {"theta", Kind::Fraction, "0.5"},
           {"sigma_right", Kind::RealList, "[0, 1]"},
           {"t_points", Kind::Count, "10000"},
           {"x_points", Kind::Count, "1000"},
           {"ladder", Kind::IncreasingCountList, "[1, 2, 4, 8, 16, 32, 64]"},
           {"tolerance", Kind::Positive, "1e-12"}});
      break;
    case ExperimentId::WeakLimits:
      add({{"a", Kind::Positive, "1"},
           {"b", Kind::Positive, "3"},
           {"theta", Kind::Fraction, "0.5"},
           {"sigma_right", Kind::RealList, "[0, 1]"},
           {"t", Kind::Positive, "1"},
           {"ladder", Kind::IncreasingCountList, "[4, 8, 16, 32, 64]"},
           {"expected_gap", Kind::NonNegative, "4"},
           {"tolerance", Kind::Positive, "1e-3"}});
      break;
    case ExperimentId::DDEquivalence:
      add({{"epsilon", Kind::Positive, "0.1"},
           {"delta", Kind::NonNegative, "0.001"},
           {"A", Kind::NonNegative, "1"},
           {"root", Kind::RootName, "minus"},
           {"model", Kind::ModelName, "quartic"},
           {"dim", Kind::Count, "2"},
           {"N", Kind::Count, "32"},
           {"t_end", Kind::Positive, "0.5"},
           {"amplitude", Kind::NonNegative, "0.5"},
           {"ladder", Kind::DecreasingPositiveList, "[0.004, 0.002, 0.001, 0.0005]"},
           {"record_interval", Kind::Positive, "0.02"},
           {"scheme", Kind::SchemeName, "IF_RK4"},
           {"reduced_scheme", Kind::SchemeName, "IMEX_CNAB2"},
           {"min_order", Kind::Positive, "1.8"},
           {"same_scheme_tolerance", Kind::Positive, "1e-10"},
           {"linear_n", Kind::Count, "3"},
           {"linear_dt", Kind::Positive, "1e-4"},
           {"linear_tolerance", Kind::Positive, "1e-8"},
           {"blowup_threshold", Kind::Threshold, "auto"}});
      break;
    case ExperimentId::MMSConvergence:
      add({{"model", Kind::ModelName, "quartic"},
           {"dim", Kind::Count, "2"},
           {"epsilon", Kind::Positive, "1"},
           {"amplitude", Kind::Positive, "0.5"},
           {"beta", Kind::Positive, "1"},
           {"ladder", Kind::IncreasingCountList, "[4, 8, 12, 16, 24, 32]"},
           {"dt", Kind::Positive, "0.001"},
           {"t_end", Kind::Positive, "1"},
           {"fine_N", Kind::Count, "48"},
           {"time_N", Kind::Count, "16"},
           {"rk4_ladder", Kind::DecreasingPositiveList, "[0.04, 0.02, 0.01, 0.005]"},
           {"cnab2_ladder", Kind::DecreasingPositiveList, "[0.01, 0.005, 0.0025, 0.00125]"},
           {"tolerance", Kind::Positive, "1e-10"},
           {"rk4_min_order", Kind::Positive, "3.5"},
           {"cnab2_min_order", Kind::Positive, "1.8"}});
      break;
  }
  return s;
}

bool takes_model_params(ExperimentId id) {
  switch (id) {
    case ExperimentId::EnergyIdentity:
    case ExperimentId::EnergyConservation:
    case ExperimentId::GalerkinCauchy:
    case ExperimentId::RegularityMonitor:
    case ExperimentId::DDEquivalence:
    case ExperimentId::MMSConvergence: return true;
    default: return false;
  }
}

const std::set<std::string, std::less<>>& known_models() {
  static const std::set<std::string, std::less<>> names{"quadratic", "quartic", "double_well", "piecewise"};
  return names;
}

/// Validates one value and returns its canonical text. Throws Error with a
/// message naming the constraint (the caller attaches the line).
std::string canonical_value(const KeySpec& spec, const std::string& raw) {
  const std::string key(spec.key);
  const auto need_number = [&](const std::string& s) {
    const auto v = to_number(s);
    if (!v) throw Error(fmt::format("{} must be a number (got '{}')", key, s));
    return *v;
  };
  const auto need_count = [&](const std::string& s, long min) {
    const auto v = to_integer(s);
    if (!v) throw Error(fmt::format("{} must be an integer (got '{}')", key, s));
    if (*v < min) throw Error(fmt::format("{} must be >= {} (got {})", key, min, *v));
    return *v;
  };
  switch (spec.kind) {
    case Kind::Positive:
      if (!(need_number(raw) > 0)) throw Error(fmt::format("{} must be > 0 (got {})", key, raw));
      return raw;
    case Kind::NonNegative:
      if (!(need_number(raw) >= 0)) throw Error(fmt::format("{} must be >= 0 (got {})", key, raw));
      return raw;
    case Kind::Fraction: {
      const double v = need_number(raw);
      if (!(v > 0 && v < 1)) throw Error(fmt::format("{} must lie in (0, 1) (got {})", key, raw));
      return raw;
    }
    case Kind::Count: need_count(raw, 1); return raw;
    case Kind::Seed: need_count(raw, 0); return raw;
    case Kind::SchemeName:
      try {
        return std::string(to_string(parse_scheme(raw)));
      } catch (const PreconditionError&) {
        throw Error(fmt::format("{} must be IF_RK4 or IMEX_CNAB2 (got '{}')", key, raw));
      }
    case Kind::ModelName:
      if (!known_models().count(raw))
        throw Error(fmt::format("{} must be one of quadratic, quartic, double_well, piecewise (got '{}')", key, raw));
      return raw;
    case Kind::RootName:
      try {
        return std::string(to_string(parse_root_choice(raw)));
      } catch (const PreconditionError&) {
        throw Error(fmt::format("{} must be minus or plus (got '{}')", key, raw));
      }
    case Kind::Threshold:
      if (lower(raw) == "auto") return "auto";
      if (!(need_number(raw) > 0)) throw Error(fmt::format("{} must be 'auto' or > 0 (got {})", key, raw));
      return raw;
    case Kind::DecreasingPositiveList:
    case Kind::PositiveList:
    case Kind::RealList: {
      const auto items = list_items(raw);
      double prev = INFINITY;
      for (const auto& it : items) {
        const double v = need_number(it);
        if (spec.kind != Kind::RealList && !(v > 0))
          throw Error(fmt::format("{} entries must be > 0 (got {})", key, it));
        if (spec.kind == Kind::DecreasingPositiveList && !(v < prev))
          throw Error(fmt::format("{} must be strictly decreasing (got {})", key, raw));
        prev = v;
      }
      return join_list(items);
    }
    case Kind::IncreasingCountList: {
      const auto items = list_items(raw);
      long prev = 0;
      for (const auto& it : items) {
        const long v = need_count(it, 1);
        if (v <= prev) throw Error(fmt::format("{} must be strictly increasing (got {})", key, raw));
        prev = v;
      }
      return join_list(items);
    }
    case Kind::ModelList: {
      const auto items = list_items(raw);
      for (const auto& it : items)
        if (!known_models().count(it)) throw Error(fmt::format("{}: unknown model '{}'", key, it));
      return join_list(items);
    }
  }
  return raw;
}

ExperimentSpec build_spec(const ConfigSection& section, const std::vector<ConfigEntry>& entries) {
  const ConfigEntry* id_entry = nullptr;
  for (const auto& e : entries)
    if (e.key == "id") id_entry = &e;
  if (!id_entry) throw ConfigError(fmt::format("section [{}] has no id", section.label), section.line);
  const auto id = parse_experiment_id(id_entry->value);
  if (!id) throw ConfigError(fmt::format("unknown experiment id '{}'", id_entry->value), id_entry->line);

  ExperimentSpec spec = default_spec(*id, section.label);
  const Schema schema = schema_for(*id);
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (e.key == "id") continue;
    if (!seen.insert(e.key).second) throw ConfigError(fmt::format("duplicate key '{}'", e.key), e.line);
    if (e.key.rfind("param_", 0) == 0 && e.key.size() > 6) {
      if (!takes_model_params(*id))
        throw ConfigError(fmt::format("experiment {} does not take model parameters ('{}')", id_entry->value, e.key),
                          e.line);
      if (!to_number(e.value))
        throw ConfigError(fmt::format("{} must be a number (got '{}')", e.key, e.value), e.line);
      spec.values[e.key] = e.value;
      continue;
    }
    const auto it = std::find_if(schema.begin(), schema.end(), [&](const KeySpec& k) { return k.key == e.key; });
    if (it == schema.end())
      throw ConfigError(fmt::format("unknown key '{}' for experiment {}", e.key, id_entry->value), e.line);
    try {
      spec.values[e.key] = canonical_value(*it, e.value);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& err) {
      throw ConfigError(err.what(), e.line);
    }
  }

  // Cross-key constraints.
  if (takes_model_params(*id)) {
    try {
      make_model(spec.text("model"), [&] {
        auto p = spec.model_params();
        if (spec.has("dim") && !p.count("dim") && spec.text("model") != "double_well" && spec.text("model") != "piecewise")
          p["dim"] = spec.number("dim");
        return p;
      }());
    } catch (const Error& err) {
      throw ConfigError(fmt::format("model parameters rejected: {}", err.what()), section.line);
    }
  }
  if (*id == ExperimentId::DDEquivalence) {
    try {
      kappa_from(spec.number("epsilon"), spec.number("delta"), spec.number("A"),
                 parse_root_choice(spec.text("root")));
    } catch (const Error& err) {
      throw ConfigError(err.what(), section.line);
    }
  }
  if (*id == ExperimentId::OscillationOracle || *id == ExperimentId::WeakLimits) {
    if (!(2 * spec.number("a") < spec.number("b")))
      throw ConfigError(fmt::format("states must satisfy 0 < 2a < b (a = {}, b = {})", spec.text("a"), spec.text("b")),
                        section.line);
  }
  return spec;
}

std::vector<ExperimentSpec> parse_sections(std::string_view text, bool allow_sweep) {
  std::vector<ExperimentSpec> out;
  for (const auto& section : parse_ini(text)) {
    std::vector<std::vector<std::string>> axes;
    std::vector<std::size_t> axis_entry;
    for (std::size_t i = 0; i < section.entries.size(); ++i) {
      const auto& v = section.entries[i].value;
      if (!v.empty() && v.front() == '{') {
        if (!allow_sweep)
          throw ConfigError(fmt::format("sweep set '{}' is only allowed in sweep configurations", v),
                            section.entries[i].line);
        try {
          axes.push_back(list_items(v, '{', '}'));
        } catch (const Error& err) {
          throw ConfigError(err.what(), section.entries[i].line);
        }
        axis_entry.push_back(i);
      }
    }
    if (axes.empty()) {
      out.push_back(build_spec(section, section.entries));
      continue;
    }
    std::size_t total = 1;
    for (const auto& axis : axes) total *= axis.size();
    for (std::size_t member = 0; member < total; ++member) {
      auto entries = section.entries;
      std::size_t rest = member;
      for (std::size_t a = axes.size(); a-- > 0;) {
        entries[axis_entry[a]].value = axes[a][rest % axes[a].size()];
        rest /= axes[a].size();
      }
      ConfigSection labelled = section;
      labelled.label = fmt::format("{}/{}", section.label, member);
      out.push_back(build_spec(labelled, entries));
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(ExperimentId id) noexcept {
  for (const auto& [k, name] : kIdNames)
    if (k == id) return name;
  return "unknown";
}

std::optional<ExperimentId> parse_experiment_id(std::string_view text) noexcept {
  for (const auto& [k, name] : kIdNames)
    if (name == text) return k;
  return std::nullopt;
}

const std::vector<ExperimentId>& all_experiment_ids() {
  static const std::vector<ExperimentId> ids = [] {
    std::vector<ExperimentId> v;
    for (const auto& [k, name] : kIdNames) v.push_back(k);
    return v;
  }();
  return ids;
}

std::vector<ConfigSection> parse_ini(std::string_view text) {
  std::vector<ConfigSection> sections;
  std::set<std::string> labels;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const std::string_view raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    ++line_no;
    std::string line = trim(raw);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("malformed section header '{}'", line), line_no);
      std::string label = trim(std::string_view(line).substr(1, line.size() - 2));
      if (label.empty()) throw ConfigError("empty section label", line_no);
      if (!labels.insert(label).second) throw ConfigError(fmt::format("duplicate section [{}]", label), line_no);
      sections.push_back({label, line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("expected 'key = value', got '{}'", line), line_no);
    if (sections.empty()) throw ConfigError("key outside of a [section]", line_no);
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (value.empty()) throw ConfigError(fmt::format("key '{}' has no value", key), line_no);
    sections.back().entries.push_back({std::move(key), std::move(value), line_no});
  }
  return sections;
}

ExperimentSpec default_spec(ExperimentId id, std::string label) {
  ExperimentSpec spec;
  spec.id = id;
  spec.label = label.empty() ? std::string(to_string(id)) : std::move(label);
  for (const auto& k : schema_for(id)) spec.values[std::string(k.key)] = std::string(k.def);
  return spec;
}

std::vector<ExperimentSpec> parse_config(std::string_view text) { return parse_sections(text, false); }

std::vector<ExperimentSpec> parse_sweep(std::string_view text) { return parse_sections(text, true); }

// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t ExperimentSpec::seed() const { return static_cast<std::uint64_t>(integer("seed")); }

std::string ExperimentSpec::canonical() const {
  std::string s = fmt::format("id = {}\n", to_string(id));
  for (const auto& [k, v] : values) s += fmt::format("{} = {}\n", k, v);
  return s;
}

std::uint64_t ExperimentSpec::hash() const { return fnv1a64(canonical()); }

const std::string& ExperimentSpec::text(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw PreconditionError(fmt::format("experiment {} has no key '{}'", label, key));
  return it->second;
}

double ExperimentSpec::number(const std::string& key) const {
  const auto v = to_number(text(key));
  if (!v) throw PreconditionError(fmt::format("{} is not a number ('{}')", key, text(key)));
  return *v;
}

int ExperimentSpec::integer(const std::string& key) const {
  const auto v = to_integer(text(key));
  if (!v) throw PreconditionError(fmt::format("{} is not an integer ('{}')", key, text(key)));
  return static_cast<int>(*v);
}

std::vector<std::string> ExperimentSpec::texts(const std::string& key) const { return list_items(text(key)); }

std::vector<double> ExperimentSpec::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : texts(key)) {
    const auto v = to_number(s);
    if (!v) throw PreconditionError(fmt::format("{} has a non-numeric entry '{}'", key, s));
    out.push_back(*v);
  }
  return out;
}

std::vector<int> ExperimentSpec::integers(const std::string& key) const {
  std::vector<int> out;
  for (const auto& s : texts(key)) {
    const auto v = to_integer(s);
    if (!v) throw PreconditionError(fmt::format("{} has a non-integer entry '{}'", key, s));
    out.push_back(static_cast<int>(*v));
  }
  return out;
}

std::map<std::string, double, std::less<>> ExperimentSpec::model_params() const {
  std::map<std::string, double, std::less<>> p;
  for (const auto& [k, v] : values)
    if (k.rfind("param_", 0) == 0) p[k.substr(6)] = *to_number(v);
  return p;
}

}  // namespace kvsim

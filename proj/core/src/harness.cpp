#include "kvsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "kvsim/errors.hpp"

namespace kvsim {

namespace fs = std::filesystem;

namespace {

std::string num(double v) { return fmt::format("{:.16e}", v); }

std::string cell(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void write_summary(const fs::path& root, const AggregateReport& agg) {
  std::ofstream summary(root / "summary.csv", std::ios::binary);
  std::ofstream runs(root / "runs.csv", std::ios::binary);
  if (!summary || !runs) throw IoError(fmt::format("cannot write summaries in {}", root.string()));
  summary << "id,label,hash,criterion,name,value,tolerance,pass\n";
  runs << "id,label,hash,pass,parameters,error\n";
  for (const auto& r : agg.reports) {
    const std::string hash = fmt::format("{:016x}", r.hash);
    for (const auto& v : r.verdicts)
      summary << fmt::format("{},{},{},{},{},{},{},{}\n", to_string(r.id), cell(r.label), hash, v.criterion,
                             cell(v.name), num(v.value), num(v.tolerance), v.pass ? 1 : 0);
    std::string params;
    for (const auto& [k, v] : r.facts) params += fmt::format("{}{}={}", params.empty() ? "" : ";", k, v);
    runs << fmt::format("{},{},{},{},{},{}\n", to_string(r.id), cell(r.label), hash, r.pass() ? 1 : 0, cell(params),
                        cell(r.error));
  }
}

}  // namespace

fs::path output_root(const fs::path& fallback) {
  const char* env = std::getenv(kOutputRootVariable);
  if (env && *env) return fs::path(env);
  return fallback;
}

fs::path experiment_dir(const fs::path& root, const ExperimentSpec& spec) {
  std::string label = spec.label.empty() ? std::string(to_string(spec.id)) : spec.label;
  for (char& c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-' || c == '/';
    if (!ok) c = '_';
  }
  fs::path out = root;
  std::stringstream parts(label);
  std::string part;
  while (std::getline(parts, part, '/')) {
    if (part.empty() || part == "." || part == "..") part = "_";
    out /= part;
  }
  return out;
}

bool AggregateReport::pass() const noexcept {
  return std::all_of(reports.begin(), reports.end(), [](const ExperimentReport& r) { return r.pass(); });
}

std::size_t AggregateReport::failures() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(reports.begin(), reports.end(), [](const ExperimentReport& r) { return !r.pass(); }));
}

AggregateReport run_specs(const std::vector<ExperimentSpec>& specs, const fs::path& root, unsigned parallelism) {
  AggregateReport agg;
  agg.reports.resize(specs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      const ExperimentSpec& spec = specs[i];
      try {
        agg.reports[i] = run_experiment(spec, experiment_dir(root, spec));
      } catch (const std::exception& e) {
        ExperimentReport& r = agg.reports[i];
        r.id = spec.id;
        r.label = spec.label;
        r.hash = spec.hash();
        r.error = e.what();
      }
    }
  };
  const unsigned width = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(specs.size())));
  if (width <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < width; ++w) pool.emplace_back(worker);
  }

  std::stable_sort(agg.reports.begin(), agg.reports.end(), [](const ExperimentReport& a, const ExperimentReport& b) {
    if (a.id != b.id) return a.id < b.id;
    if (a.hash != b.hash) return a.hash < b.hash;
    return a.label < b.label;
  });
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", root.string(), ec.message()));
  write_summary(root, agg);
  return agg;
}

void print_report(std::ostream& out, const AggregateReport& agg) {
  std::map<int, CriterionStatus> crit;
  for (const auto& r : agg.reports) {
    if (!r.error.empty()) {
      out << fmt::format("{} [{}] ERROR {}\n", to_string(r.id), r.label, r.error);
      continue;
    }
    out << fmt::format("{} [{}] {}\n", to_string(r.id), r.label, r.pass() ? "PASS" : "FAIL");
    for (const auto& v : r.verdicts) {
      if (!v.pass)
        out << fmt::format("    failed: {} value {:.6e} tolerance {:.3e} {}\n", v.name, v.value, v.tolerance, v.detail);
      auto& c = crit[v.criterion];
      c.criterion = v.criterion;
      ++c.checks;
      if (v.pass) ++c.passed;
    }
  }
  for (const auto& [n, c] : crit) {
    if (n == 0) continue;
    out << fmt::format("criterion {}: {} ({}/{} checks)\n", n, c.pass() ? "PASS" : "FAIL", c.passed, c.checks);
  }
}

AggregateReport verify_oracles(const fs::path& root, unsigned parallelism) {
  std::vector<ExperimentSpec> specs;
  for (ExperimentId id : {ExperimentId::Dispersion, ExperimentId::OscillationOracle, ExperimentId::WeakLimits})
    specs.push_back(default_spec(id, std::string(to_string(id))));
  return run_specs(specs, root / "oracles", parallelism);
}

std::vector<StoredVerdict> collect_verdicts(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(fmt::format("{} is not a directory", dir.string()));
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "verdicts.csv") files.push_back(e.path());
  if (files.empty()) throw IoError(fmt::format("no verdicts.csv found below {}", dir.string()));
  std::sort(files.begin(), files.end());

  std::vector<StoredVerdict> rows;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read {}", f.string()));
    const std::string experiment = fs::relative(f.parent_path(), dir).generic_string();
    std::string line;
    std::getline(in, line);
    if (line.rfind("criterion,name,value,tolerance,pass", 0) != 0)
      throw IoError(fmt::format("{} has an unexpected header", f.string()));
    int line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto cols = split_csv_line(line);
      if (cols.size() < 5) throw IoError(fmt::format("{}:{}: expected at least 5 columns", f.string(), line_no));
      StoredVerdict sv;
      sv.experiment = experiment;
      try {
        sv.verdict.criterion = std::stoi(cols[0]);
        sv.verdict.name = cols[1];
        sv.verdict.value = std::stod(cols[2]);
        sv.verdict.tolerance = std::stod(cols[3]);
      } catch (const std::exception&) {
        throw IoError(fmt::format("{}:{}: malformed number", f.string(), line_no));
      }
      sv.verdict.pass = cols[4] == "1";
      if (cols.size() > 5) sv.verdict.detail = cols[5];
      rows.push_back(std::move(sv));
    }
  }

  std::ofstream out(dir / "report.csv", std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", (dir / "report.csv").string()));
  out << "experiment,criterion,name,value,tolerance,pass\n";
  for (const auto& r : rows)
    out << fmt::format("{},{},{},{},{},{}\n", cell(r.experiment), r.verdict.criterion, cell(r.verdict.name),
                       num(r.verdict.value), num(r.verdict.tolerance), r.verdict.pass ? 1 : 0);
  return rows;
}

std::vector<CriterionStatus> tally(const std::vector<StoredVerdict>& rows) {
  std::map<int, CriterionStatus> m;
  for (const auto& r : rows) {
    auto& c = m[r.verdict.criterion];
    c.criterion = r.verdict.criterion;
    ++c.checks;
    if (r.verdict.pass) ++c.passed;
  }
  std::vector<CriterionStatus> out;
  for (auto& [k, v] : m) out.push_back(v);
  return out;
}

}  // namespace kvsim

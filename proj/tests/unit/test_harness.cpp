#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kvsim/config.hpp"
#include "kvsim/errors.hpp"
#include "kvsim/experiments.hpp"
#include "kvsim/harness.hpp"

using namespace kvsim;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("kvsim_harness_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentSpec quick_energy(double amplitude) {
  auto s = parse_config(
      "[zero]\nid = energy_identity\nN = 8\nt_end = 0.1\nladder = [0.02, 0.01]\ncnab2_ladder = [0.01, 0.005]\n"
      "amplitude = " +
      std::to_string(amplitude) + "\n")[0];
  return s;
}

}  // namespace

TEST(Harness, EmptyListPasses) {
  TempDir dir;
  const auto agg = run_specs({}, dir.path());
  EXPECT_TRUE(agg.pass());
  EXPECT_EQ(agg.failures(), 0u);
  EXPECT_EQ(slurp(dir.path() / "summary.csv"), "id,label,hash,criterion,name,value,tolerance,pass\n");
}

TEST(Harness, OutputRootFollowsEnvironment) {
  ::setenv(kOutputRootVariable, "/tmp/somewhere", 1);
  EXPECT_EQ(output_root(), fs::path("/tmp/somewhere"));
  ::setenv(kOutputRootVariable, "", 1);
  EXPECT_EQ(output_root("fallback"), fs::path("fallback"));
  ::unsetenv(kOutputRootVariable);
  EXPECT_EQ(output_root(), fs::path("kvsim_output"));
}

TEST(Harness, ExperimentDirectories) {
  auto s = default_spec(ExperimentId::Dispersion, "base/3");
  EXPECT_EQ(experiment_dir("root", s), fs::path("root") / "base" / "3");
  s.label = "we ird/../x";
  EXPECT_EQ(experiment_dir("root", s), fs::path("root") / "we_ird" / "_" / "x");
  s.label.clear();
  EXPECT_EQ(experiment_dir("root", s), fs::path("root") / "dispersion");
}

TEST(Harness, ZeroDataHasZeroResidual) {
  TempDir dir;
  const auto report = run_experiment(quick_energy(0.0), dir.path() / "zero");
  ASSERT_TRUE(report.error.empty());
  ASSERT_FALSE(report.verdicts.empty());
  for (const auto& v : report.verdicts) {
    if (v.name.find("balance_at_finest_dt") != std::string::npos) EXPECT_EQ(v.value, 0.0) << v.name;
    EXPECT_TRUE(v.pass) << v.name;
  }
  const std::string ladder = slurp(dir.path() / "zero" / "energy_ladder.csv");
  EXPECT_NE(ladder.find("0.0000000000000000e+00"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path() / "zero" / "verdicts.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "zero" / "manifest.txt"));
  EXPECT_TRUE(fs::exists(dir.path() / "zero" / "energy_ladder.csv"));
}

TEST(Harness, DivergingMembersDoNotStopOthers) {
  TempDir dir;
  // The regularity monitor turns a guard trip into a failed check; other
  // pipelines abort and the harness records the error with the configuration.
  auto guarded = parse_config("[guarded]\nid = regularity_monitor\nN = 8\nt_end = 0.1\nblowup_threshold = 1e-12\n")[0];
  auto aborted = quick_energy(0.5);
  aborted.label = "aborted";
  aborted.values["blowup_threshold"] = "1e-12";
  auto good = default_spec(ExperimentId::OscillationOracle, "good");
  auto good2 = default_spec(ExperimentId::WeakLimits, "good2");
  const auto agg = run_specs({guarded, aborted, good, good2}, dir.path(), 2);
  ASSERT_EQ(agg.reports.size(), 4u);
  EXPECT_FALSE(agg.pass());
  EXPECT_EQ(agg.failures(), 2u);
  for (const auto& r : agg.reports) {
    if (r.label == "aborted") {
      EXPECT_FALSE(r.pass());
      EXPECT_NE(r.error.find("blowup_threshold = 1e-12"), std::string::npos) << r.error;
    } else if (r.label == "guarded") {
      EXPECT_TRUE(r.error.empty());
      ASSERT_FALSE(r.verdicts.empty());
      EXPECT_EQ(r.verdicts[0].name, "completed_without_guard_trip");
      EXPECT_FALSE(r.verdicts[0].pass);
    } else {
      EXPECT_TRUE(r.pass()) << r.label;
    }
  }
  const std::string runs = slurp(dir.path() / "runs.csv");
  EXPECT_NE(runs.find("aborted"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path() / "good" / "weak_limits.csv") || fs::exists(dir.path() / "good" / "oscillation.csv"));
  std::ostringstream out;
  print_report(out, agg);
  EXPECT_NE(out.str().find("ERROR"), std::string::npos);
  EXPECT_NE(out.str().find("criterion 2: PASS"), std::string::npos);
  EXPECT_NE(out.str().find("criterion 7: FAIL"), std::string::npos);
}

TEST(Harness, ResultsAreDeterministic) {
  TempDir dir;
  const std::vector<ExperimentSpec> specs{default_spec(ExperimentId::OscillationOracle, "osc"),
                                          default_spec(ExperimentId::WeakLimits, "weak"), quick_energy(0.3)};
  run_specs(specs, dir.path() / "a", 1);
  run_specs(specs, dir.path() / "b", 3);
  int compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir.path() / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir.path() / "a");
    EXPECT_EQ(slurp(e.path()), slurp(dir.path() / "b" / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 8);
}

TEST(Harness, CollectAndTally) {
  TempDir dir;
  run_specs({default_spec(ExperimentId::WeakLimits, "w")}, dir.path());
  const auto rows = collect_verdicts(dir.path());
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0].experiment, "w");
  const auto t = tally(rows);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].criterion, 2);
  EXPECT_TRUE(t[0].pass());
  EXPECT_TRUE(fs::exists(dir.path() / "report.csv"));
  EXPECT_THROW(collect_verdicts(dir.path() / "missing"), IoError);
  fs::create_directories(dir.path() / "empty");
  EXPECT_THROW(collect_verdicts(dir.path() / "empty"), IoError);
}

TEST(Harness, VerdictsCsvLayout) {
  TempDir dir;
  run_experiment(default_spec(ExperimentId::OscillationOracle, "osc"), dir.path());
  const std::string v = slurp(dir.path() / "verdicts.csv");
  EXPECT_EQ(v.rfind("criterion,name,value,tolerance,pass,detail\n", 0), 0u);
  const std::string m = slurp(dir.path() / "manifest.txt");
  EXPECT_NE(m.find("[config]"), std::string::npos);
  EXPECT_NE(m.find("id = oscillation_oracle"), std::string::npos);
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kvsim/config.hpp"
#include "kvsim/solver.hpp"

namespace kvsim {

/// One checked property. `criterion` is the acceptance criterion number the
/// check belongs to, or 0 for informational checks.
struct Verdict {
  int criterion = 0;
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct ExperimentReport {
  ExperimentId id = ExperimentId::Dispersion;
  std::string label;
  std::uint64_t hash = 0;
  std::vector<Verdict> verdicts;
  /// Files written, relative to the experiment's output directory.
  std::vector<std::string> artifacts;
  /// Derived run parameters echoed in the manifest (kappa and the root for dd_equivalence).
  std::vector<std::pair<std::string, std::string>> facts;
  /// Non-empty when the experiment aborted; the verdict list is then incomplete.
  std::string error;

  bool pass() const noexcept;
};

/// Runs the pipeline behind spec.id and writes its CSVs, plots, verdicts.csv
/// and manifest.txt into `output_dir` (created if needed). Errors raised by the
/// pipeline propagate with the canonical configuration appended.
ExperimentReport run_experiment(const ExperimentSpec& spec, const std::filesystem::path& output_dir);

// ---------------------------------------------------------------------------
// Building blocks shared with the tests.

/// Smooth data built from |k| <= 1 modes. d = 2:
///   y1 = amp sin(x2),  y2 = amp cos(x1) + (amp/2) sin(x1 + x2),  v = 0
/// d = 1: y = amp sin(x) + (amp/2) cos(2x). d = 3 adds y3 = amp sin(x1).
KVState low_mode_data(int dim, int N, double amplitude, const Matrix& Fbar);

/// Random analytic data y_k = amp rho^{|k|_1} (a_k + i b_k) with a_k, b_k
/// uniform in [-1/2, 1/2] and v = 0. The coefficient of a wavevector does not
/// depend on N, so the data at N is the projection of the data at any N' > N.
KVState analytic_data(int dim, int N, double amplitude, double rho, std::uint64_t seed);

/// Manufactured solution y* = A sin(t) phi(x), v* = A cos(t) phi(x) with
/// phi_j(x) = prod_a exp(beta sin(x_a + c_ja)) minus its mean, and the
/// forcing that makes it an exact solution of the Galerkin system up to the
/// tail of phi beyond the fine resolution.
class ManufacturedSolution {
 public:
  ManufacturedSolution(ModelPtr model, double epsilon, double amplitude, double beta, int fine_N);

  /// P^N f as a separable forcing (the stress part is interpolated exactly in s = A sin t).
  ForcingPtr forcing(int N) const;
  KVState initial(int N) const;
  /// ||v - v*(t)||_{L2} + ||F - F*(t)||_{L2}, with the exact fields on the fine modes.
  double error(const KVState& state) const;

 private:
  ModelPtr model_;
  double epsilon_, amplitude_;
  int fine_N_;
  SpectralField phi_;              // fine modes, vector
  SpectralField lap_phi_;          // fine modes, vector
  std::vector<double> nodes_;      // interpolation nodes in s
  std::vector<SpectralField> div_stress_;  // div S(I + s_m grad phi) on fine modes
};

/// Least-squares slope of log(error) against log(step); the convergence order.
double fitted_order(const std::vector<double>& step, const std::vector<double>& error);

}  // namespace kvsim

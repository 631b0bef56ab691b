#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kvsim/solver.hpp"

namespace kvsim {

/// One recorded time level. The two residual columns hold the signed
/// cumulative defects at that time:
///   balance_residual   = E(t) + int_0^t D - E(0)
///   modulated_residual = G(t) + int_0^t (Q - K H1F) - G(0)
struct DiagnosticRow {
  double t = 0, E = 0, D = 0, H1F = 0, G = 0, Q = 0, Hs1 = 0, Hs2 = 0, Hs3 = 0;
  double balance_residual = 0, modulated_residual = 0;
};

enum class TimeQuadrature { Trapezoid, Cubic };

struct DiagnosticSeries {
  double epsilon = 1.0;
  double K = 0.0;
  /// |T| inf W, used by the Gronwall majorant (-inf when W is unbounded below).
  double energy_floor = 0.0;
  std::vector<DiagnosticRow> rows;
};

/// The modulated pair at general viscosity:
///   G = int (1/eps)|v - (eps/2) div F|^2 + (eps/4)|div F|^2 + (2/eps) W(F)
///   Q = int sum_b D^2W(F):(d_b F, d_b F) + K |grad F|^2 + |grad v|^2
/// so that dG/dt + Q - K int |grad F|^2 = 0 along the semi-discrete flow.
struct ModulatedEnergy {
  double G = 0.0;
  double Q = 0.0;
  /// Smallest pointwise value of D^2W(F) + K over the grid, as a quadratic form on the sampled d_b F.
  double min_pointwise_form = 0.0;
};

double energy(const KVState& state, const StoredEnergyModel& model, FourierTransform& transform);
/// D = eps |T| sum |k|^2 |v_k|^2.
double dissipation(const KVState& state, double epsilon);
ModulatedEnergy modulated_energy(const KVState& state, const StoredEnergyModel& model, double epsilon, double K,
                                 FourierTransform& transform);
/// Minimum eigenvalue of D^2W(F(x)) + K over the physical grid.
double min_hessian_eigenvalue(const KVState& state, const StoredEnergyModel& model, double K,
                              FourierTransform& transform);

/// Evaluates all columns except the residuals.
DiagnosticRow evaluate_row(const KVState& state, const StoredEnergyModel& model, double epsilon, double K,
                           FourierTransform& transform);

/// Running integrals F_j = int_{t_0}^{t_j} f on the recorded grid. The cubic
/// rule integrates the local four-point Lagrange interpolant over each interval.
std::vector<double> cumulative_integral(const std::vector<double>& t, const std::vector<double>& f,
                                        TimeQuadrature rule);

/// Fills the residual columns.
void finalize(DiagnosticSeries& series, TimeQuadrature rule = TimeQuadrature::Cubic);

/// max_t |E(t) + int D - E(0)|.
double energy_balance_residual(const DiagnosticSeries& series);
/// Same defect with the balance restarted at the first record t_r >= t_from:
/// max over t >= t_r of |E(t) + int_{t_r}^t D - E(t_r)|. Used to leave out a
/// lower-order startup step.
double energy_balance_residual(const DiagnosticSeries& series, double t_from);
/// max_t [G(t) + int Q - K int H1F - G(0)]_+.
double modulated_inequality_residual(const DiagnosticSeries& series);
/// max_t |G(t) + int Q - K int H1F - G(0)| (the identity version).
double modulated_identity_residual(const DiagnosticSeries& series);

struct GronwallReport {
  /// (4/eps)(G(0) - (2/eps)|T| min(inf W, 0)) exp(4 K t / eps) at each recorded time.
  std::vector<double> bound;
  /// max_t H1F(t) / bound(t).
  double worst_ratio = 0.0;
  bool pass = false;
};
GronwallReport gronwall_h1_bound(const DiagnosticSeries& series);

/// Energy never increases by more than `tolerance` between records.
bool energy_monotone(const DiagnosticSeries& series, double tolerance);

/// Header t,E,D,H1F,G,Q,Hs1,Hs2,Hs3,balance_residual,modulated_residual then
/// one row per record, 17 significant digits, UNIX newlines.
void write_csv(std::ostream& out, const DiagnosticSeries& series);
void write_csv(const std::filesystem::path& path, const DiagnosticSeries& series);
std::vector<DiagnosticRow> read_csv(const std::filesystem::path& path);

struct Simulation {
  DiagnosticSeries series;
  KVState final_state;
};

/// Runs the solver, recording a row every record_every steps, and finalizes the residuals.
Simulation simulate(const SolverConfig& config, KVState initial, TimeQuadrature rule = TimeQuadrature::Cubic);

}  // namespace kvsim

#pragma once

#include <string_view>
#include <vector>

#include "kvsim/solver.hpp"

namespace kvsim {

// Viscous-capillary elasticity
//   v_t - div S(F) = eps Lap v - delta A div Lap F,   F_t = grad v,   curl F = 0
// and its reduction through w = v - kappa div F, valid when
// kappa^2 - eps kappa + delta A = 0:
//   w_t - div S(F) = (eps - kappa) Lap w,   F_t - grad w = kappa Lap F.

enum class RootChoice { Minus, Plus };

std::string_view to_string(RootChoice r) noexcept;
RootChoice parse_root_choice(std::string_view text);

struct DDConfig {
  double epsilon = 0.1;
  double delta = 0.001;
  double A = 1.0;
  RootChoice root = RootChoice::Minus;
  double kappa = 0.0;

  double capillarity() const noexcept { return delta * A; }
};

/// Root of kappa^2 - eps kappa + delta A = 0. The larger root comes from the
/// cancellation-free formula, the smaller one from the product delta A; a zero
/// discriminant returns eps/2 exactly. Requires eps > 0, delta >= 0, A >= 0.
/// A negative discriminant is rejected with a message stating the admissible ranges.
double kappa_from(double epsilon, double delta, double A, RootChoice root = RootChoice::Minus);

/// Fills kappa via kappa_from.
DDConfig make_dd_config(double epsilon, double delta, double A, RootChoice root = RootChoice::Minus);

/// w = v - kappa div F on coefficients: w_k = v_k + kappa |k|^2 y_k. The
/// returned state carries w in its `v` slot.
KVState transform_state(const KVState& state, double kappa);
/// Inverse map v = w + kappa div F.
KVState untransform_state(const KVState& state, double kappa);
/// Field version on an explicit matrix field F.
SpectralField transform_velocity(const SpectralField& v, const SpectralField& F, double kappa);

/// Integrates the viscous-capillary system from (v, y, Fbar). The capillary
/// term is integrated exactly with the viscous one in the per-mode linear
/// exponential. config.epsilon is overwritten with dd.epsilon.
RunOutcome solve_difdis(SolverConfig config, const DDConfig& dd, KVState initial, const RecordFn& on_record = {});

/// Integrates the reduced system from (w, y, Fbar); `initial.v` holds w.
RunOutcome solve_difdisred(SolverConfig config, const DDConfig& dd, KVState initial, const RecordFn& on_record = {});

struct EquivalenceReport {
  std::vector<double> t;
  /// ||w_difdis(t) - w_difdisred(t)||_{L^2} at each record.
  std::vector<double> discrepancy;
  double max_discrepancy = 0.0;
};

/// Runs both systems from the same (v, y, Fbar), the reduced one started at
/// w(0) = v(0) - kappa div F(0), and compares w at every record.
/// `reduced_scheme` defaults to the scheme of `config`.
EquivalenceReport equivalence_check(const SolverConfig& config, const DDConfig& dd, const KVState& initial,
                                    std::optional<Scheme> reduced_scheme = std::nullopt);

}  // namespace kvsim

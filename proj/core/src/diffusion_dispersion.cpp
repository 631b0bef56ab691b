#include "kvsim/diffusion_dispersion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "kvsim/errors.hpp"

namespace kvsim {

std::string_view to_string(RootChoice r) noexcept { return r == RootChoice::Minus ? "minus" : "plus"; }

RootChoice parse_root_choice(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "minus" || s == "-") return RootChoice::Minus;
  if (s == "plus" || s == "+") return RootChoice::Plus;
  throw PreconditionError(fmt::format("root choice must be 'minus' or 'plus' (got '{}')", text));
}

double kappa_from(double epsilon, double delta, double A, RootChoice root) {
  if (!(epsilon > 0)) throw PreconditionError(fmt::format("viscosity must be positive (got {})", epsilon));
  if (!(delta >= 0)) throw PreconditionError(fmt::format("capillarity delta must be nonnegative (got {})", delta));
  if (!(A >= 0)) throw PreconditionError(fmt::format("constant A must be nonnegative (got {})", A));
  const double dA = delta * A;
  double disc = epsilon * epsilon - 4.0 * dA;
  // Inputs such as (0.1, 0.01, 1/4) describe a double root, but eps^2 and
  // 4 delta A round differently; a discriminant at rounding level counts as zero.
  if (std::abs(disc) <= 4.0 * std::numeric_limits<double>::epsilon() * epsilon * epsilon) disc = 0.0;
  if (disc < 0)
    throw PreconditionError(fmt::format(
        "no real kappa for eps = {}, delta = {}, A = {}: eps^2 - 4 delta A = {:.6g} < 0. "
        "Admissible: delta = eps^rho with rho > 2 (any A), or delta = eps^2 with 0 < A <= 1/4",
        epsilon, delta, A, disc));
  if (disc == 0) return 0.5 * epsilon;
  const double big = 0.5 * (epsilon + std::sqrt(disc));
  return root == RootChoice::Plus ? big : dA / big;
}

DDConfig make_dd_config(double epsilon, double delta, double A, RootChoice root) {
  DDConfig dd;
  dd.epsilon = epsilon;
  dd.delta = delta;
  dd.A = A;
  dd.root = root;
  dd.kappa = kappa_from(epsilon, delta, A, root);
  return dd;
}

namespace {

KVState shift_velocity(const KVState& state, double c) {
  KVState out = state;
  const ModeSet& modes = state.y.modes();
  for (int i = 0; i < state.dim(); ++i)
    for (std::size_t m = 0; m < modes.count(); ++m)
      out.v(i, m) += c * static_cast<double>(modes.squared_norm(m)) * state.y(i, m);
  return out;
}

}  // namespace

KVState transform_state(const KVState& state, double kappa) { return shift_velocity(state, kappa); }

KVState untransform_state(const KVState& state, double kappa) { return shift_velocity(state, -kappa); }

SpectralField transform_velocity(const SpectralField& v, const SpectralField& F, double kappa) {
  if (F.shape() != FieldShape::Matrix || v.shape() != FieldShape::Vector || !(F.modes() == v.modes()))
    throw ShapeError("transform_velocity expects a vector v and a matrix F on the same modes");
  SpectralField w = v;
  w.axpy(-kappa, divergence(F));
  return w;
}

RunOutcome solve_difdis(SolverConfig config, const DDConfig& dd, KVState initial, const RecordFn& on_record) {
  config.epsilon = dd.epsilon;
  config.capillarity = dd.capillarity();
  return run(config, std::move(initial), on_record);
}

RunOutcome solve_difdisred(SolverConfig config, const DDConfig& dd, KVState initial, const RecordFn& on_record) {
  config.epsilon = dd.epsilon;
  config.capillarity = 0.0;
  return run_with_symbol(config, LinearSymbol{dd.kappa, dd.epsilon - dd.kappa, 0.0}, std::move(initial), on_record);
}

EquivalenceReport equivalence_check(const SolverConfig& config, const DDConfig& dd, const KVState& initial,
                                    std::optional<Scheme> reduced_scheme) {
  std::vector<double> t_full;
  std::vector<SpectralField> w_full;
  solve_difdis(config, dd, initial, [&](const KVState& s, Integrator&) {
    t_full.push_back(s.t);
    w_full.push_back(transform_state(s, dd.kappa).v);
  });

  SolverConfig red = config;
  if (reduced_scheme) red.scheme = *reduced_scheme;
  EquivalenceReport rep;
  std::size_t i = 0;
  solve_difdisred(red, dd, transform_state(initial, dd.kappa), [&](const KVState& s, Integrator&) {
    if (i >= w_full.size() || std::abs(t_full[i] - s.t) > 1e-12 * std::max(1.0, s.t))
      throw PreconditionError("record times of the two systems do not line up");
    SpectralField diff = s.v;
    diff -= w_full[i];
    rep.t.push_back(s.t);
    rep.discrepancy.push_back(l2_norm(diff));
    rep.max_discrepancy = std::max(rep.max_discrepancy, rep.discrepancy.back());
    ++i;
  });
  return rep;
}

}  // namespace kvsim

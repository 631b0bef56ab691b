#include "kvsim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "kvsim/errors.hpp"

namespace kvsim {

namespace {

constexpr const char* kHeader = "t,E,D,H1F,G,Q,Hs1,Hs2,Hs3,balance_residual,modulated_residual";

// d_b F for each direction b, as matrix fields: (d_b F)_{ia,k} = -k_a k_b y_{i,k}.
std::vector<SpectralField> deformation_derivatives(const KVState& s) {
  const int d = s.dim();
  const ModeSet& modes = s.y.modes();
  std::vector<SpectralField> out;
  for (int b = 0; b < d; ++b) {
    SpectralField g(modes, FieldShape::Matrix);
    for (std::size_t m = 0; m < modes.count(); ++m) {
      const Wavevector k = modes.wavevector(m);
      for (int i = 0; i < d; ++i)
        for (int a = 0; a < d; ++a)
          g(i * d + a, m) = -static_cast<double>(static_cast<long>(k[static_cast<std::size_t>(a)]) *
                                                 k[static_cast<std::size_t>(b)]) *
                            s.y(i, m);
    }
    out.push_back(std::move(g));
  }
  return out;
}

struct GridIntegrals {
  double W = 0.0;          // int W(F)
  double hessian = 0.0;    // int sum_b D^2W(F):(d_b F, d_b F)
  double min_form = 0.0;   // min over points of sum_b (D^2W + K):(d_b F, d_b F)
};

GridIntegrals grid_integrals(const KVState& s, const StoredEnergyModel& model, double K, FourierTransform& tr,
                             bool with_hessian) {
  const int d = s.dim();
  const int nc = d * d;
  const PhysicalField F = tr.inverse(s.deformation());
  std::vector<PhysicalField> dF;
  if (with_hessian)
    for (const auto& g : deformation_derivatives(s)) dF.push_back(tr.inverse(g));
  const std::size_t np = F.points;
  std::array<double, kMaxDim * kMaxDim> Fp{};
  const std::span<const double> Fspan(Fp.data(), static_cast<std::size_t>(nc));
  Hessian H(d);
  std::array<double, kMaxDim * kMaxDim> g{};
  GridIntegrals out;
  out.min_form = std::numeric_limits<double>::infinity();
  double sumW = 0.0, sumH = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    for (int c = 0; c < nc; ++c) Fp[static_cast<std::size_t>(c)] = F.values[static_cast<std::size_t>(c) * np + p];
    sumW += model.energy(Fspan);
    if (!with_hessian) continue;
    model.hessian(Fspan, H.flat());
    double form = 0.0, shifted = 0.0;
    for (int b = 0; b < d; ++b) {
      double g2 = 0.0;
      for (int c = 0; c < nc; ++c) {
        const double x = dF[static_cast<std::size_t>(b)].values[static_cast<std::size_t>(c) * np + p];
        g[static_cast<std::size_t>(c)] = x;
        g2 += x * x;
      }
      const double h = H.contract({g.data(), static_cast<std::size_t>(nc)}, {g.data(), static_cast<std::size_t>(nc)});
      form += h;
      shifted += h + K * g2;
    }
    sumH += form;
    out.min_form = std::min(out.min_form, shifted);
  }
  const double w = tr.grid().cell_volume();
  out.W = sumW * w;
  out.hessian = sumH * w;
  if (!with_hessian) out.min_form = 0.0;
  return out;
}

SpectralField divergence_of_deformation(const KVState& s) {
  SpectralField div = s.y;
  const ModeSet& modes = s.y.modes();
  for (int i = 0; i < s.dim(); ++i)
    for (std::size_t m = 0; m < modes.count(); ++m) div(i, m) *= -static_cast<double>(modes.squared_norm(m));
  return div;
}

ModulatedEnergy modulated_from(const KVState& s, double epsilon, double K, const GridIntegrals& gi) {
  const SpectralField divF = divergence_of_deformation(s);
  SpectralField z = s.v;
  z.axpy(-0.5 * epsilon, divF);
  const double z2 = std::pow(l2_norm(z), 2);
  const double div2 = std::pow(l2_norm(divF), 2);
  ModulatedEnergy me;
  me.G = z2 / epsilon + 0.25 * epsilon * div2 + 2.0 / epsilon * gi.W;
  const double H1F = h1_seminorm_squared(s.deformation());
  me.Q = gi.hessian + K * H1F + h1_seminorm_squared(s.v);
  me.min_pointwise_form = gi.min_form;
  return me;
}

}  // namespace

double energy(const KVState& state, const StoredEnergyModel& model, FourierTransform& transform) {
  return total_energy(state, model, transform);
}

double dissipation(const KVState& state, double epsilon) { return epsilon * h1_seminorm_squared(state.v); }

ModulatedEnergy modulated_energy(const KVState& state, const StoredEnergyModel& model, double epsilon, double K,
                                 FourierTransform& transform) {
  return modulated_from(state, epsilon, K, grid_integrals(state, model, K, transform, true));
}

double min_hessian_eigenvalue(const KVState& state, const StoredEnergyModel& model, double K,
                              FourierTransform& transform) {
  const int d = state.dim();
  const int nc = d * d;
  const PhysicalField F = transform.inverse(state.deformation());
  std::array<double, kMaxDim * kMaxDim> Fp{};
  Hessian H(d);
  Eigen::MatrixXd m(nc, nc);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < F.points; ++p) {
    for (int c = 0; c < nc; ++c) Fp[static_cast<std::size_t>(c)] = F.values[static_cast<std::size_t>(c) * F.points + p];
    model.hessian({Fp.data(), static_cast<std::size_t>(nc)}, H.flat());
    for (int r = 0; r < nc; ++r)
      for (int c = 0; c < nc; ++c) m(r, c) = 0.5 * (H(r, c) + H(c, r)) + (r == c ? K : 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    worst = std::min(worst, solver.eigenvalues().minCoeff());
  }
  return worst;
}

DiagnosticRow evaluate_row(const KVState& s, const StoredEnergyModel& model, double epsilon, double K,
                           FourierTransform& transform) {
  const GridIntegrals gi = grid_integrals(s, model, K, transform, true);
  const ModulatedEnergy me = modulated_from(s, epsilon, K, gi);
  const SpectralField F = s.deformation();
  DiagnosticRow r;
  r.t = s.t;
  r.E = 0.5 * std::pow(l2_norm(s.v), 2) + gi.W;
  r.D = dissipation(s, epsilon);
  r.H1F = h1_seminorm_squared(F);
  r.G = me.G;
  r.Q = me.Q;
  r.Hs1 = hs_norm(s.v, 1) + hs_norm(F, 1);
  r.Hs2 = hs_norm(s.v, 2) + hs_norm(F, 2);
  r.Hs3 = hs_norm(s.v, 3) + hs_norm(F, 3);
  return r;
}

// ---------------------------------------------------------------------------

std::vector<double> cumulative_integral(const std::vector<double>& t, const std::vector<double>& f,
                                        TimeQuadrature rule) {
  if (t.size() != f.size()) throw ShapeError("time and value series differ in length");
  const std::size_t n = t.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  // Three-point Gauss-Legendre nodes on [-1, 1]; exact for the cubic interpolant.
  static constexpr double gx[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double a = t[j], b = t[j + 1];
    double piece = 0.0;
    if (rule == TimeQuadrature::Trapezoid || n < 4) {
      piece = 0.5 * (b - a) * (f[j] + f[j + 1]);
    } else {
      const std::size_t s0 = std::min(j > 0 ? j - 1 : 0, n - 4);
      for (int g = 0; g < 3; ++g) {
        const double x = 0.5 * (a + b) + 0.5 * (b - a) * gx[g];
        double value = 0.0;
        for (std::size_t p = s0; p < s0 + 4; ++p) {
          double basis = 1.0;
          for (std::size_t q = s0; q < s0 + 4; ++q)
            if (q != p) basis *= (x - t[q]) / (t[p] - t[q]);
          value += basis * f[p];
        }
        piece += 0.5 * (b - a) * gw[g] * value;
      }
    }
    out[j + 1] = out[j] + piece;
  }
  return out;
}

void finalize(DiagnosticSeries& series, TimeQuadrature rule) {
  auto& rows = series.rows;
  if (rows.empty()) return;
  std::vector<double> t, D, net;
  for (const auto& r : rows) {
    t.push_back(r.t);
    D.push_back(r.D);
    net.push_back(r.Q - series.K * r.H1F);
  }
  const auto intD = cumulative_integral(t, D, rule);
  const auto intNet = cumulative_integral(t, net, rule);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    rows[j].balance_residual = rows[j].E + intD[j] - rows[0].E;
    rows[j].modulated_residual = rows[j].G + intNet[j] - rows[0].G;
  }
}

double energy_balance_residual(const DiagnosticSeries& series) {
  double worst = 0.0;
  for (const auto& r : series.rows) worst = std::max(worst, std::abs(r.balance_residual));
  return worst;
}

double energy_balance_residual(const DiagnosticSeries& series, double t_from) {
  const auto& rows = series.rows;
  const auto ref = std::find_if(rows.begin(), rows.end(), [&](const DiagnosticRow& r) { return r.t >= t_from; });
  if (ref == rows.end()) throw PreconditionError(fmt::format("no record at or after t = {}", t_from));
  double worst = 0.0;
  for (auto it = ref; it != rows.end(); ++it)
    worst = std::max(worst, std::abs(it->balance_residual - ref->balance_residual));
  return worst;
}

double modulated_inequality_residual(const DiagnosticSeries& series) {
  double worst = 0.0;
  for (const auto& r : series.rows) worst = std::max(worst, r.modulated_residual);
  return worst;
}

double modulated_identity_residual(const DiagnosticSeries& series) {
  double worst = 0.0;
  for (const auto& r : series.rows) worst = std::max(worst, std::abs(r.modulated_residual));
  return worst;
}

GronwallReport gronwall_h1_bound(const DiagnosticSeries& series) {
  GronwallReport rep;
  if (series.rows.empty()) {
    rep.pass = true;
    return rep;
  }
  const double eps = series.epsilon;
  const double shifted = series.rows.front().G - 2.0 / eps * std::min(series.energy_floor, 0.0);
  const double t0 = series.rows.front().t;
  rep.pass = true;
  for (const auto& r : series.rows) {
    const double bound = 4.0 / eps * shifted * std::exp(4.0 * series.K * (r.t - t0) / eps);
    rep.bound.push_back(bound);
    const double ratio = bound > 0 ? r.H1F / bound : (r.H1F > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (!(r.H1F <= bound * (1.0 + 1e-12) + 1e-300)) rep.pass = false;
  }
  return rep;
}

bool energy_monotone(const DiagnosticSeries& series, double tolerance) {
  for (std::size_t j = 1; j < series.rows.size(); ++j)
    if (series.rows[j].E > series.rows[j - 1].E + tolerance) return false;
  return true;
}

// ---------------------------------------------------------------------------

void write_csv(std::ostream& out, const DiagnosticSeries& series) {
  out << kHeader << '\n';
  for (const auto& r : series.rows)
    out << fmt::format("{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n", r.t,
                       r.E, r.D, r.H1F, r.G, r.Q, r.Hs1, r.Hs2, r.Hs3, r.balance_residual, r.modulated_residual);
}

void write_csv(const std::filesystem::path& path, const DiagnosticSeries& series) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  write_csv(out, series);
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

std::vector<DiagnosticRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw IoError(fmt::format("'{}' is not a diagnostics CSV", path.string()));
  std::vector<DiagnosticRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 11> v{};
    std::istringstream ss(line);
    std::string cell;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::getline(ss, cell, ',')) throw IoError(fmt::format("short row in '{}'", path.string()));
      v[i] = std::stod(cell);
    }
    rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10]});
  }
  return rows;
}

// ---------------------------------------------------------------------------

Simulation simulate(const SolverConfig& config, KVState initial, TimeQuadrature rule) {
  const ModelPtr model = config.resolve_model();
  SolverConfig cfg = config;
  cfg.model = model;
  DiagnosticSeries series;
  series.epsilon = config.epsilon;
  series.K = model->semiconvexity();
  series.energy_floor = std::pow(2.0 * std::numbers::pi, config.dim) * model->energy_lower_bound();
  auto outcome = run(cfg, std::move(initial), [&](const KVState& s, Integrator& integ) {
    series.rows.push_back(evaluate_row(s, *model, config.epsilon, series.K, integ.transform()));
  });
  finalize(series, rule);
  return {std::move(series), std::move(outcome.final_state)};
}

}  // namespace kvsim

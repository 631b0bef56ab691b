#include "kvsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "kvsim/diagnostics.hpp"
#include "kvsim/diffusion_dispersion.hpp"
#include "kvsim/errors.hpp"
#include "kvsim/oracles.hpp"
#include "kvsim/svg.hpp"

namespace kvsim {

bool ExperimentReport::pass() const noexcept {
  if (!error.empty() || verdicts.empty()) return false;
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

// ---------------------------------------------------------------------------
// Data builders

namespace {

void set_mode(SpectralField& f, int component, const Wavevector& k, Complex value) {
  const auto& m = f.modes();
  if (!m.contains(k)) return;
  const std::size_t i = m.index(k);
  f(component, i) = value;
  f(component, m.conjugate_index(i)) = std::conj(value);
}

}  // namespace

KVState low_mode_data(int dim, int N, double amplitude, const Matrix& Fbar) {
  if (dim < 1 || dim > 3) throw PreconditionError(fmt::format("dimension must be 1, 2 or 3 (got {})", dim));
  KVState s = KVState::zero(dim, N, Fbar);
  const Complex I(0.0, 1.0);
  // sin(k.x) has coefficient -i/2 at k; cos(k.x) has 1/2.
  if (dim == 1) {
    set_mode(s.y, 0, {1, 0, 0}, -I * amplitude / 2.0);
    set_mode(s.y, 0, {2, 0, 0}, Complex(amplitude / 4.0, 0.0));
    return s;
  }
  set_mode(s.y, 0, {0, 1, 0}, -I * amplitude / 2.0);
  set_mode(s.y, 1, {1, 0, 0}, Complex(amplitude / 2.0, 0.0));
  set_mode(s.y, 1, {1, 1, 0}, -I * amplitude / 4.0);
  if (dim == 3) set_mode(s.y, 2, {1, 0, 0}, -I * amplitude / 2.0);
  return s;
}

KVState analytic_data(int dim, int N, double amplitude, double rho, std::uint64_t seed) {
  KVState s = KVState::zero(dim, N, Matrix::identity(dim));
  const auto& modes = s.y.modes();
  const double scale = 1.0 / static_cast<double>(std::numeric_limits<std::uint64_t>::max());
  for (std::size_t i = modes.zero_index() + 1; i < modes.count(); ++i) {
    const Wavevector& k = modes.wavevector(i);
    int l1 = 0;
    for (int a = 0; a < dim; ++a) l1 += std::abs(k[static_cast<std::size_t>(a)]);
    const double size = amplitude * std::pow(rho, l1);
    for (int c = 0; c < dim; ++c) {
      std::mt19937_64 gen(fnv1a64(fmt::format("{}:{}:{},{},{}", seed, c, k[0], k[1], k[2])));
      const double re = static_cast<double>(gen()) * scale - 0.5;
      const double im = static_cast<double>(gen()) * scale - 0.5;
      s.y(c, i) = size * Complex(re, im);
      s.y(c, modes.conjugate_index(i)) = std::conj(s.y(c, i));
    }
  }
  return s;
}

double fitted_order(const std::vector<double>& step, const std::vector<double>& error) {
  if (step.size() != error.size() || step.size() < 2)
    throw PreconditionError("order fit needs at least two (step, error) pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(step.size());
  for (std::size_t i = 0; i < step.size(); ++i) {
    if (!(step[i] > 0) || !(error[i] > 0)) return std::numeric_limits<double>::quiet_NaN();
    const double x = std::log(step[i]), y = std::log(error[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Manufactured solution

namespace {

/// Lagrange basis polynomial m on the given nodes.
double lagrange(const std::vector<double>& nodes, std::size_t m, double s) {
  double out = 1.0;
  for (std::size_t j = 0; j < nodes.size(); ++j)
    if (j != m) out *= (s - nodes[j]) / (nodes[m] - nodes[j]);
  return out;
}

}  // namespace

ManufacturedSolution::ManufacturedSolution(ModelPtr model, double epsilon, double amplitude, double beta, int fine_N)
    : model_(std::move(model)), epsilon_(epsilon), amplitude_(amplitude), fine_N_(fine_N) {
  const auto degree = model_->stress_degree();
  if (!degree || *degree > 3)
    throw PreconditionError("the manufactured solution needs a stress that is a polynomial of degree <= 3");
  const int dim = model_->dim();
  const Grid grid = Grid::for_degree(dim, fine_N, 3);
  FourierTransform fft(grid);

  PhysicalField samples(grid, FieldShape::Vector);
  for (std::size_t p = 0; p < grid.point_count(); ++p) {
    const auto x = grid.point(p);
    for (int j = 0; j < dim; ++j) {
      double v = 1.0;
      for (int a = 0; a < dim; ++a)
        v *= std::exp(beta * std::sin(x[static_cast<std::size_t>(a)] + 0.3 + 0.7 * j + 1.1 * a));
      samples.component(j)[p] = v;
    }
  }
  phi_ = fft.forward(samples);
  for (int j = 0; j < dim; ++j) phi_(j, phi_.modes().zero_index()) = 0.0;
  lap_phi_ = laplacian(phi_);

  // S(I + s grad phi) is a polynomial of degree <= 3 in s, so four nodes interpolate it exactly.
  const SpectralField grad_phi = gradient(phi_);
  for (int m = 0; m < 4; ++m) {
    const double s = amplitude * std::cos(std::numbers::pi * (2.0 * m + 1.0) / 8.0);
    nodes_.push_back(s);
    SpectralField F = s * grad_phi;
    for (int i = 0; i < dim; ++i) F(i * dim + i, F.modes().zero_index()) += 1.0;
    div_stress_.push_back(divergence(fft.nonlinear_stress(*model_, F)));
  }
}

ForcingPtr ManufacturedSolution::forcing(int N) const {
  auto f = std::make_shared<SeparableForcing>();
  const double A = amplitude_, eps = epsilon_;
  f->add_term([A](double t) { return -A * std::sin(t); }, resample(phi_, N));
  f->add_term([A, eps](double t) { return -eps * A * std::cos(t); }, resample(lap_phi_, N));
  for (std::size_t m = 0; m < nodes_.size(); ++m) {
    f->add_term([A, m, nodes = nodes_](double t) { return -lagrange(nodes, m, A * std::sin(t)); },
                resample(div_stress_[m], N));
  }
  return f;
}

KVState ManufacturedSolution::initial(int N) const {
  const int dim = model_->dim();
  KVState s = KVState::zero(dim, N, Matrix::identity(dim));
  s.v = amplitude_ * resample(phi_, N);
  return s;
}

double ManufacturedSolution::error(const KVState& state) const {
  SpectralField dv = resample(state.v, fine_N_);
  dv.axpy(-amplitude_ * std::cos(state.t), phi_);
  SpectralField dy = resample(state.y, fine_N_);
  dy.axpy(-amplitude_ * std::sin(state.t), phi_);
  return l2_norm(dv) + std::sqrt(h1_seminorm_squared(dy));
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

namespace fs = std::filesystem;

std::string num(double v) { return fmt::format("{:.16e}", v); }

/// Keeps CSV cells free of separators.
std::string cell(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

class Context {
 public:
  Context(const ExperimentSpec& spec, fs::path dir, ExperimentReport& report)
      : spec(spec), dir_(std::move(dir)), report_(report) {}

  const ExperimentSpec& spec;

  void verdict(int criterion, std::string name, bool pass, double value, double tolerance, std::string detail = {}) {
    report_.verdicts.push_back({criterion, std::move(name), pass, value, tolerance, std::move(detail)});
  }

  /// Opens an artifact for writing and registers it.
  std::ofstream open(const std::string& name) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw IoError(fmt::format("cannot open {} for writing", (dir_ / name).string()));
    report_.artifacts.push_back(name);
    return f;
  }
  void series_csv(const std::string& name, const DiagnosticSeries& series) {
    write_csv(dir_ / name, series);
    report_.artifacts.push_back(name);
  }
  void plot(const std::string& name, const std::vector<PlotSeries>& series, const PlotOptions& options) {
    write_line_plot(dir_ / name, series, options);
    report_.artifacts.push_back(name);
  }
  void manifest_extra(std::string key, std::string value) { extra_.emplace_back(std::move(key), std::move(value)); }
  const std::vector<std::pair<std::string, std::string>>& extra() const { return extra_; }

 private:
  fs::path dir_;
  ExperimentReport& report_;
  std::vector<std::pair<std::string, std::string>> extra_;
};

std::optional<double> threshold(const ExperimentSpec& spec) {
  if (!spec.has("blowup_threshold") || spec.text("blowup_threshold") == "auto") return std::nullopt;
  return spec.number("blowup_threshold");
}

int natural_dim(const std::string& model_id, int requested) {
  return (model_id == "double_well" || model_id == "piecewise") ? 1 : requested;
}

ModelPtr build_model(const std::string& id, int dim, ParamMap params) {
  params["dim"] = dim;
  return make_model(id, params);
}

/// Mean deformation used with a model. For the piecewise law it is the middle
/// of the increasing branch [b, 2b]; on the decreasing cubic join every high
/// mode grows at a rate close to -min sigma' and no fixed resolution keeps up.
Matrix base_deformation(const StoredEnergyModel& model) {
  if (const auto* pw = dynamic_cast<const PiecewiseEnergy1D*>(&model)) return Matrix::identity(1, 1.5 * pw->law().b());
  return Matrix::identity(model.dim());
}

/// Amplitude keeping low-mode data inside the branch [b, 2b] of the piecewise law.
double data_amplitude(const StoredEnergyModel& model, double amplitude) {
  if (const auto* pw = dynamic_cast<const PiecewiseEnergy1D*>(&model)) return std::min(amplitude, 0.25 * pw->law().b());
  return amplitude;
}

SolverConfig model_config(const ModelPtr& model, int N, double dt, double t_end, Scheme scheme, double eps,
                          int record_every, std::optional<double> guard) {
  SolverConfig c;
  c.dim = model->dim();
  c.N = N;
  c.dt = dt;
  c.t_end = t_end;
  c.scheme = scheme;
  c.epsilon = eps;
  c.model = model;
  c.model_id = std::string(model->id());
  c.record_every = record_every;
  c.blowup_threshold = guard;
  if (!model->stress_degree()) c.padding_degree = 3;
  return c;
}

/// max over t >= t_from of [E(t) + int D - E(t_r)]_+, the one-sided balance defect.
double one_sided_balance(const DiagnosticSeries& s, double t_from) {
  std::size_t r = 0;
  while (r < s.rows.size() && s.rows[r].t < t_from - 1e-12) ++r;
  if (r == s.rows.size()) throw PreconditionError("no record after the requested start time");
  double worst = 0.0;
  for (std::size_t i = r; i < s.rows.size(); ++i)
    worst = std::max(worst, s.rows[i].balance_residual - s.rows[r].balance_residual);
  return worst;
}

std::string dt_tag(double dt) { return fmt::format("{}", dt); }

// --- energy identity / conservation ------------------------------------------

void energy_pipeline(Context& cx) {
  const auto& sp = cx.spec;
  const int dim = natural_dim(sp.text("model"), sp.integer("dim"));
  const ModelPtr model = build_model(sp.text("model"), dim, sp.model_params());
  const Matrix Fbar = base_deformation(*model);
  const KVState initial =
      low_mode_data(dim, sp.integer("N"), data_amplitude(*model, sp.number("amplitude")), Fbar);
  const double tol = sp.number("tolerance");

  auto table = cx.open("energy_ladder.csv");
  table << "scheme,dt,E0,residual,one_sided_residual,relative_residual\n";
  std::vector<PlotSeries> energy_plot, residual_plot;

  struct Ladder {
    Scheme scheme;
    std::string key, record_key, order_key;
  };
  for (const Ladder& l : {Ladder{Scheme::IF_RK4, "ladder", "record_every", "rk4_min_order"},
                          Ladder{Scheme::IMEX_CNAB2, "cnab2_ladder", "cnab2_record_every", "cnab2_min_order"}}) {
    const std::string name(to_string(l.scheme));
    const auto dts = sp.numbers(l.key);
    std::vector<double> eq, one_sided;
    double E0 = 0.0;
    PlotSeries residual_series{name, {}, {}};
    for (double dt : dts) {
      const SolverConfig cfg = model_config(model, sp.integer("N"), dt, sp.number("t_end"), l.scheme,
                                            sp.number("epsilon"), sp.integer(l.record_key), threshold(sp));
      const Simulation sim = simulate(cfg, initial);
      // The first CNAB2 step is an IMEX Euler start; the balance is measured from t = 2 dt on.
      const double t_from = l.scheme == Scheme::IMEX_CNAB2 ? 2.0 * dt : 0.0;
      E0 = sim.series.rows.front().E;
      eq.push_back(energy_balance_residual(sim.series, t_from));
      one_sided.push_back(one_sided_balance(sim.series, t_from));
      table << fmt::format("{},{},{},{},{},{}\n", name, num(dt), num(E0), num(eq.back()), num(one_sided.back()),
                           num(E0 != 0.0 ? eq.back() / std::abs(E0) : eq.back()));
      cx.series_csv(fmt::format("series_{}_dt{}.csv", name, dt_tag(dt)), sim.series);
      residual_series.x.push_back(dt);
      residual_series.y.push_back(eq.back());
      if (dt == dts.back()) {
        PlotSeries e{name, {}, {}};
        for (const auto& r : sim.series.rows) e.x.push_back(r.t), e.y.push_back(r.E);
        energy_plot.push_back(std::move(e));
      }
    }
    residual_plot.push_back(std::move(residual_series));

    const double bound = tol * std::abs(E0);
    cx.verdict(3, fmt::format("{}_balance_at_finest_dt", name), one_sided.back() <= bound, one_sided.back(), bound,
               fmt::format("dt = {}", dts.back()));
    const bool vanishing = std::all_of(eq.begin(), eq.end(), [](double r) { return r == 0.0; });
    const double order = vanishing ? std::numeric_limits<double>::infinity() : fitted_order(dts, eq);
    const double min_order = sp.number(l.order_key);
    cx.verdict(3, fmt::format("{}_balance_order", name), vanishing || order >= min_order, order, min_order,
               vanishing ? "residual vanishes at every step size" : "");
    bool decreasing = true;
    for (std::size_t i = 1; i < eq.size(); ++i) decreasing = decreasing && (eq[i] < eq[i - 1]);
    cx.verdict(4, fmt::format("{}_equality_residual_to_zero", name), vanishing || (decreasing && order > 0), order, 0.0,
               fmt::format("finest residual {:.3e}", eq.back()));
  }
  cx.plot("energy.svg", energy_plot, {"Energy at the finest step", "t", "E", false, false});
  cx.plot("balance_residual.svg", residual_plot, {"Energy balance residual", "dt", "residual", true, true});
}

// --- H1 propagation / modulated inequality -------------------------------------

void modulated_pipeline(Context& cx) {
  const auto& sp = cx.spec;
  const double tol = sp.number("tolerance");
  auto table = cx.open("modulated.csv");
  table << "model,dim,dt,E0,G0,gronwall_worst_ratio,modulated_inequality_residual,modulated_identity_residual\n";
  std::vector<PlotSeries> g_plot, ratio_plot;
  for (const std::string& id : sp.texts("models")) {
    const int dim = natural_dim(id, 2);
    const ModelPtr model = build_model(id, dim, {});
    const double dt = dim == 1 ? sp.number("dt_1d") : sp.number("dt");
    const SolverConfig cfg = model_config(model, sp.integer("N"), dt, sp.number("t_end"),
                                          parse_scheme(sp.text("scheme")), sp.number("epsilon"),
                                          sp.integer("record_every"), threshold(sp));
    const KVState initial =
        low_mode_data(dim, cfg.N, data_amplitude(*model, sp.number("amplitude")), base_deformation(*model));
    const Simulation sim = simulate(cfg, initial);
    const auto& rows = sim.series.rows;
    const GronwallReport gr = gronwall_h1_bound(sim.series);
    const double ineq = modulated_inequality_residual(sim.series);
    const double ident = modulated_identity_residual(sim.series);
    const double G0 = rows.front().G;
    table << fmt::format("{},{},{},{},{},{},{},{}\n", id, dim, num(dt), num(rows.front().E), num(G0),
                         num(gr.worst_ratio), num(ineq), num(ident));
    cx.series_csv(fmt::format("series_{}.csv", id), sim.series);

    cx.verdict(5, fmt::format("{}_gronwall_h1_bound", id), gr.pass, gr.worst_ratio, 1.0, "max H1F / majorant");
    const double bound = tol * (std::abs(G0) + 1.0);
    cx.verdict(5, fmt::format("{}_modulated_inequality", id), ineq <= bound, ineq, bound);

    PlotSeries g{id, {}, {}}, ratio{id, {}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      g.x.push_back(rows[i].t);
      g.y.push_back(rows[i].G);
      ratio.x.push_back(rows[i].t);
      ratio.y.push_back(gr.bound[i] > 0 ? rows[i].H1F / gr.bound[i] : 0.0);
    }
    g_plot.push_back(std::move(g));
    ratio_plot.push_back(std::move(ratio));
  }
  cx.plot("modulated_energy.svg", g_plot, {"Modulated energy", "t", "G", false, false});
  cx.plot("h1_ratio.svg", ratio_plot, {"H1 norm of F over the Gronwall majorant", "t", "ratio", false, false});
}

// --- Galerkin Cauchy --------------------------------------------------------------

void galerkin_pipeline(Context& cx) {
  const auto& sp = cx.spec;
  const int dim = natural_dim(sp.text("model"), sp.integer("dim"));
  const ModelPtr model = build_model(sp.text("model"), dim, sp.model_params());
  const auto ladder = sp.integers("ladder");
  if (ladder.size() < 2) throw PreconditionError("galerkin_cauchy needs at least two resolutions");

  std::vector<std::vector<SpectralField>> previous;  // y at each record for the previous N
  std::vector<double> times, gaps;
  auto table = cx.open("galerkin_cauchy.csv");
  table << "N,next_N,gap\n";
  for (std::size_t level = 0; level < ladder.size(); ++level) {
    const int N = ladder[level];
    const SolverConfig cfg = model_config(model, N, sp.number("dt"), sp.number("t_end"),
                                          parse_scheme(sp.text("scheme")), sp.number("epsilon"),
                                          sp.integer("record_every"), threshold(sp));
    std::vector<SpectralField> records;
    std::vector<double> t;
    KVState initial = analytic_data(dim, N, sp.number("amplitude"), sp.number("rho"), sp.seed());
    initial.Fbar = base_deformation(*model);
    run(cfg, std::move(initial), [&](const KVState& s, Integrator&) {
      records.push_back(s.y);
      t.push_back(s.t);
    });
    if (level > 0) {
      if (t.size() != times.size()) throw PreconditionError("record counts differ between resolutions");
      double gap = 0.0;
      for (std::size_t r = 0; r < t.size(); ++r) {
        SpectralField d = resample(previous[r][0], N);
        d -= records[r];
        gap = std::max(gap, std::sqrt(h1_seminorm_squared(d)));
      }
      gaps.push_back(gap);
      table << fmt::format("{},{},{}\n", ladder[level - 1], N, num(gap));
    }
    previous.assign(records.size(), {});
    for (std::size_t r = 0; r < records.size(); ++r) previous[r] = {std::move(records[r])};
    times = std::move(t);
  }

  bool decreasing = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) decreasing = decreasing && gaps[i] < gaps[i - 1];
  cx.verdict(6, "gap_strictly_decreasing", decreasing, gaps.back(), 0.0,
             fmt::format("{} gaps over N = {}..{}", gaps.size(), ladder.front(), ladder[ladder.size() - 2]));
  const double tol = sp.number("tolerance");
  cx.verdict(6, "final_gap", gaps.back() < tol, gaps.back(), tol, fmt::format("N = {}", ladder[ladder.size() - 2]));

  PlotSeries s{"gap", {}, {}};
  for (std::size_t i = 0; i < gaps.size(); ++i) s.x.push_back(ladder[i]), s.y.push_back(gaps[i]);
  cx.plot("galerkin_cauchy.svg", {s}, {"sup_t ||F^2N - F^N||", "N", "gap", true, true});
}

// --- regularity monitor -------------------------------------------------------------

void regularity_pipeline(Context& cx) {
  const auto& sp = cx.spec;
  const int dim = natural_dim(sp.text("model"), sp.integer("dim"));
  const ModelPtr model = build_model(sp.text("model"), dim, sp.model_params());
  const SolverConfig cfg = model_config(model, sp.integer("N"), sp.number("dt"), sp.number("t_end"),
                                        parse_scheme(sp.text("scheme")), sp.number("epsilon"),
                                        sp.integer("record_every"), threshold(sp));
  KVState initial = analytic_data(dim, cfg.N, sp.number("amplitude"), sp.number("rho"), sp.seed());
  initial.Fbar = base_deformation(*model);
  try {
    const Simulation sim = simulate(cfg, initial);
    cx.series_csv("regularity.csv", sim.series);
    const auto& rows = sim.series.rows;
    double peak = 0.0;
    bool finite = true;
    for (const auto& r : rows) {
      finite = finite && std::isfinite(r.Hs3);
      peak = std::max(peak, r.Hs3);
    }
    const double ratio = rows.front().Hs3 > 0 ? peak / rows.front().Hs3 : (peak == 0.0 ? 1.0 : INFINITY);
    cx.verdict(7, "completed_without_guard_trip", finite, rows.back().t, cfg.t_end);
    cx.verdict(7, "h3_max_over_initial", finite && ratio <= sp.number("max_ratio"), ratio, sp.number("max_ratio"),
               fmt::format("initial H3 {:.6e}", rows.front().Hs3));
    PlotSeries h3{"H3(v) + H3(F)", {}, {}};
    for (const auto& r : rows) h3.x.push_back(r.t), h3.y.push_back(r.Hs3);
    cx.plot("regularity.svg", {h3}, {"H3 norms", "t", "norm", false, true});
  } catch (const BlowUpError& e) {
    cx.verdict(7, "completed_without_guard_trip", false, e.time(), cfg.t_end, e.what());
  }
}

// --- dispersion ---------------------------------------------------------------------

void dispersion_pipeline(Context& cx) {
  const auto& sp = cx.spec;
  const double tol = sp.number("tolerance"), vieta_tol = sp.number("vieta_tolerance");
  const Scheme scheme = parse_scheme(sp.text("scheme"));
  auto table = cx.open("dispersion.csv");
  table << "kappa,n,lambda_plus_re,lambda_plus_im,lambda_minus_re,lambda_minus_im,real_roots,double_root,"
           "asymptotic,vieta_sum_error,vieta_product_error,measured_rate,rel_error,fit_residual\n";
  std::vector<PlotSeries> plot;
  for (double kappa : sp.numbers("kappa")) {
    PlotSeries err{fmt::format("kappa = {}", kappa), {}, {}};
    for (int n = 1; n <= sp.integer("n_max"); ++n) {
      const DispersionRoots roots = dispersion_roots(n, kappa);
      const double vieta = std::max(roots.vieta_sum_error(), roots.vieta_product_error());
      cx.verdict(1, fmt::format("vieta_kappa{}_n{}", kappa, n), vieta <= vieta_tol, vieta, vieta_tol);
      std::string measured = ",,";
      if (!roots.complex_pair) {
        const LinearDecayReport rep =
            verify_linear_decay(n, kappa, sp.number("dt"), sp.number("t_end"), scheme, sp.integer("samples"));
        measured = fmt::format("{},{},{}", num(rep.measured_rate), num(rep.rel_error), num(rep.fit_residual));
        cx.verdict(1, fmt::format("decay_rate_kappa{}_n{}", kappa, n), rep.fit_accepted && rep.rel_error < tol,
                   rep.rel_error, tol, rep.degenerate ? "double root" : "");
        err.x.push_back(n);
        err.y.push_back(rep.rel_error);
      }
      table << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", num(kappa), n, num(roots.lambda_plus.real()),
                           num(roots.lambda_plus.imag()), num(roots.lambda_minus.real()),
                           num(roots.lambda_minus.imag()), roots.complex_pair ? 0 : 1, roots.double_root ? 1 : 0,
                           num(roots.asymptotic), num(roots.vieta_sum_error()), num(roots.vieta_product_error()),
                           measured);
    }
    plot.push_back(std::move(err));
  }
  cx.plot("dispersion_error.svg", plot, {"Relative error of the measured decay rate", "n", "error", false, true});
}

// --- oscillation oracle ----------------------------------------------------------------

PiecewiseStress1D oracle_law(const ExperimentSpec& sp) {
  return PiecewiseStress1D::build(sp.number("a"), sp.number("b"), sp.numbers("sigma_right"), sp.number("theta"));
}

std::vector<double> equispaced(double lo, double hi, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
  return out;
}

void oscillation_pipeline(Context& cx) {
  const auto& sp = cx.spec;
  const double tol = sp.number("tolerance");
  const PiecewiseStress1D law = oracle_law(sp);
  const OscillationFamily base(law);
  const auto ts = equispaced(OscillationFamily::t_min, OscillationFamily::t_max, sp.integer("t_points"));
  const int nx = sp.integer("x_points");
  std::vector<double> xs(static_cast<std::size_t>(nx));
  for (int i = 0; i < nx; ++i) xs[static_cast<std::size_t>(i)] = (i + 0.5) / nx;

  std::vector<OracleCheck> checks;
  const auto check = [&](std::string id, double value) {
    checks.push_back({id, value, tol, value < tol});
    cx.verdict(2, std::move(id), value < tol, value, tol);
  };
  check("stress_condition", law.condition_residual(sp.integer("t_points")));

  auto table = cx.open("oscillation.csv");
  table << "n,rankine_hugoniot,stress_flux_spread,classical_residual\n";
  const auto t_coarse = equispaced(OscillationFamily::t_min, OscillationFamily::t_max, 11);
  double rh_max = 0, spread_max = 0, classical_max = 0;
  for (int n : sp.integers("ladder")) {
    const OscillationFamily fam = base.member(n);
    const double rh = verify_rankine_hugoniot(fam, ts);
    double spread = 0;
    std::vector<SpaceTimePoint> pts;
    for (double t : t_coarse) {
      spread = std::max(spread, stress_flux_spread(fam, t, xs));
      for (double x : xs)
        if (fam.interface_distance(x) > 1e-9) pts.push_back({t, x});
    }
    const double classical = verify_classical_residual(fam, pts);
    table << fmt::format("{},{},{},{}\n", n, num(rh), num(spread), num(classical));
    rh_max = std::max(rh_max, rh);
    spread_max = std::max(spread_max, spread);
    classical_max = std::max(classical_max, classical);
  }
  check("rankine_hugoniot", rh_max);
  check("stress_flux_constant_in_x", spread_max);
  check("classical_residual_off_interfaces", classical_max);
  auto oracle = cx.open("oracle_checks.csv");
  write_oracle_csv(oracle, checks);
}

// --- weak limits -------------------------------------------------------------------

void weak_limits_pipeline(Context& cx) {
  const auto& sp = cx.spec;
  const double tol = sp.number("tolerance");
  const OscillationFamily fam(oracle_law(sp));
  const WeakLimits wl = weak_limits(fam, sp.number("t"), sp.integers("ladder"));

  auto table = cx.open("weak_limits.csv");
  table << "n,u_mean,stress_mean,v_l2_gap\n";
  for (const auto& l : wl.levels)
    table << fmt::format("{},{},{},{}\n", l.n, num(l.u_mean), num(l.stress_mean), num(l.v_l2_gap));
  auto limits = cx.open("weak_limits_extrapolated.csv");
  limits << "quantity,value,expected\n";
  limits << fmt::format("u_limit,{},{}\n", num(wl.u_limit), num(wl.u_expected));
  limits << fmt::format("stress_limit,{},{}\n", num(wl.stress_limit), num(wl.stress_expected));
  limits << fmt::format("stress_of_limit,{},{}\n", num(wl.stress_of_limit), num(fam.sigma().sigma(wl.u_expected)));
  limits << fmt::format("v_gap_limit,{},{}\n", num(wl.v_gap_limit), num(0.0));
  limits << fmt::format("gap,{},{}\n", num(wl.gap), num(sp.number("expected_gap")));

  const double gap_error = std::abs(wl.gap - sp.number("expected_gap"));
  cx.verdict(2, "weak_limit_gap", gap_error < tol, gap_error, tol,
             fmt::format("stress_limit {:.12g} sigma(u_limit) {:.12g}", wl.stress_limit, wl.stress_of_limit));
  cx.verdict(2, "extrapolation_matches_closed_form", wl.max_extrapolation_error < tol, wl.max_extrapolation_error,
             tol);
  cx.verdict(2, "velocity_converges_strongly", std::abs(wl.v_gap_limit) < tol, std::abs(wl.v_gap_limit), tol);

  PlotSeries u{"u mean", {}, {}}, st{"stress mean", {}, {}};
  for (const auto& l : wl.levels) {
    u.x.push_back(l.n), u.y.push_back(l.u_mean);
    st.x.push_back(l.n), st.y.push_back(l.stress_mean);
  }
  cx.plot("weak_limits.svg", {u, st}, {"Weighted means of u_n and sigma(u_n)", "n", "mean", true, false});
}

// --- diffusion-dispersion equivalence -----------------------------------------------

/// Single-mode linear check: both systems against the closed-form 2x2 exponential.
struct LinearModeResult {
  double same_scheme = 0.0;
  double difdis_vs_exact = 0.0;
  double difdisred_vs_exact = 0.0;
};

LinearModeResult linear_mode_check(const DDConfig& dd, int n, double dt, double t_end, Scheme scheme) {
  const double mu = 1.0, q = static_cast<double>(n) * n;
  const ModelPtr model = make_model("quadratic", {{"dim", 1}, {"mu", mu}});
  SolverConfig cfg = model_config(model, n, dt, t_end, scheme, dd.epsilon, std::max(1, static_cast<int>(std::lround(0.01 / dt))),
                                  std::nullopt);
  KVState initial = KVState::zero(1, n, Matrix::identity(1));
  const std::size_t mode = initial.y.modes().index({n, 0, 0});
  initial.y(0, mode) = 0.5;
  initial.y(0, initial.y.modes().conjugate_index(mode)) = 0.5;

  // (y, v)' = [[0, 1], [-mu q - delta A q^2, -eps q]] (y, v)
  const auto exact = [&](double t) {
    const auto e = exp2x2(0.0, 1.0, -mu * q - dd.capillarity() * q * q, -dd.epsilon * q, t);
    return std::pair{e[0] * 0.5, e[2] * 0.5};
  };

  LinearModeResult out;
  std::vector<Complex> w_full;
  solve_difdis(cfg, dd, initial, [&](const KVState& s, Integrator&) {
    const auto [y, v] = exact(s.t);
    out.difdis_vs_exact = std::max(out.difdis_vs_exact, std::abs(s.y(0, mode) - y) + std::abs(s.v(0, mode) - v));
    w_full.push_back(s.v(0, mode) + dd.kappa * q * s.y(0, mode));
  });
  std::size_t i = 0;
  solve_difdisred(cfg, dd, transform_state(initial, dd.kappa), [&](const KVState& s, Integrator&) {
    const auto [y, v] = exact(s.t);
    const double w = v + dd.kappa * q * y;
    out.difdisred_vs_exact =
        std::max(out.difdisred_vs_exact, std::abs(s.y(0, mode) - y) + std::abs(s.v(0, mode) - w));
    if (i < w_full.size()) out.same_scheme = std::max(out.same_scheme, std::abs(s.v(0, mode) - w_full[i]));
    ++i;
  });
  return out;
}

void dd_pipeline(Context& cx) {
  const auto& sp = cx.spec;
  const double eps = sp.number("epsilon");
  const DDConfig dd = make_dd_config(eps, sp.number("delta"), sp.number("A"), parse_root_choice(sp.text("root")));
  cx.manifest_extra("epsilon", fmt::format("{}", dd.epsilon));
  cx.manifest_extra("delta", fmt::format("{}", dd.delta));
  cx.manifest_extra("A", fmt::format("{}", dd.A));
  cx.manifest_extra("kappa", num(dd.kappa));
  cx.manifest_extra("root_choice", std::string(to_string(dd.root)));

  // Double root at A = 1/4 with delta = eps^2.
  double worst_half = 0.0;
  for (double e : {0.05, 0.1, 0.5, 1.0, 2.0, eps}) {
    for (RootChoice r : {RootChoice::Minus, RootChoice::Plus})
      worst_half = std::max(worst_half, std::abs(kappa_from(e, e * e, 0.25, r) - e / 2.0));
  }
  cx.verdict(8, "kappa_equals_half_epsilon_at_quarter", worst_half == 0.0, worst_half, 0.0);

  bool below = true, above = false;
  try {
    kappa_from(eps, eps * eps, 0.25 - 1e-9);
  } catch (const PreconditionError&) {
    below = false;
  }
  try {
    kappa_from(eps, eps * eps, 0.25 + 1e-9);
    above = true;
  } catch (const PreconditionError&) {
  }
  cx.verdict(8, "admissible_below_quarter", below, 0.25 - 1e-9, 0.25);
  cx.verdict(8, "rejected_above_quarter", !above, 0.25 + 1e-9, 0.25);

  double root_inv = 0.0;
  for (double e : {0.01, 0.1, 1.0, 10.0})
    for (double A : {0.0, 0.01, 0.1, 0.2, 0.25})
      for (double ratio : {0.1, 0.5, 1.0}) {
        const double delta = ratio * e * e;
        const double kp = kappa_from(e, delta, A, RootChoice::Plus), km = kappa_from(e, delta, A, RootChoice::Minus);
        root_inv = std::max(root_inv, std::abs(kp + km - e) / e);
        if (delta * A > 0) root_inv = std::max(root_inv, std::abs(kp * km - delta * A) / (delta * A));
      }
  cx.verdict(8, "root_invariants", root_inv <= 1e-13, root_inv, 1e-13);

  const int dim = natural_dim(sp.text("model"), sp.integer("dim"));
  const ModelPtr model = build_model(sp.text("model"), dim, sp.model_params());
  const KVState initial = low_mode_data(dim, sp.integer("N"), data_amplitude(*model, sp.number("amplitude")),
                                        base_deformation(*model));
  const Scheme scheme = parse_scheme(sp.text("scheme")), reduced = parse_scheme(sp.text("reduced_scheme"));
  const auto dts = sp.numbers("ladder");
  auto table = cx.open("dd_equivalence.csv");
  table << "dt,scheme,reduced_scheme,max_discrepancy\n";
  std::vector<double> disc;
  PlotSeries series{"max ||w_difdis - w_difdisred||", {}, {}};
  for (double dt : dts) {
    const int every = static_cast<int>(std::lround(sp.number("record_interval") / dt));
    if (every < 1 || std::abs(every * dt - sp.number("record_interval")) > 1e-9 * sp.number("record_interval"))
      throw PreconditionError(fmt::format("record_interval must be a multiple of dt = {}", dt));
    const SolverConfig cfg = model_config(model, sp.integer("N"), dt, sp.number("t_end"), scheme, eps, every,
                                          threshold(sp));
    const EquivalenceReport rep = equivalence_check(cfg, dd, initial, reduced);
    disc.push_back(rep.max_discrepancy);
    series.x.push_back(dt);
    series.y.push_back(rep.max_discrepancy);
    table << fmt::format("{},{},{},{}\n", num(dt), to_string(scheme), to_string(reduced), num(rep.max_discrepancy));
  }
  const double order = fitted_order(dts, disc);
  cx.verdict(8, "equivalence_order", order >= sp.number("min_order"), order, sp.number("min_order"),
             fmt::format("{} vs {}", to_string(scheme), to_string(reduced)));

  {
    const double dt = dts.front();
    const int every = static_cast<int>(std::lround(sp.number("record_interval") / dt));
    const SolverConfig cfg = model_config(model, sp.integer("N"), dt, sp.number("t_end"), scheme, eps, every,
                                          threshold(sp));
    const EquivalenceReport rep = equivalence_check(cfg, dd, initial, scheme);
    table << fmt::format("{},{},{},{}\n", num(dt), to_string(scheme), to_string(scheme), num(rep.max_discrepancy));
    cx.verdict(8, "same_scheme_discrepancy", rep.max_discrepancy < sp.number("same_scheme_tolerance"),
               rep.max_discrepancy, sp.number("same_scheme_tolerance"));

    // Without capillarity the two systems coincide.
    const DDConfig plain = make_dd_config(eps, 0.0, sp.number("A"), RootChoice::Minus);
    SolverConfig short_cfg = cfg;
    short_cfg.t_end = std::min(cfg.t_end, 10 * every * dt);
    const EquivalenceReport zero = equivalence_check(short_cfg, plain, initial, scheme);
    cx.verdict(8, "no_capillarity_identical", zero.max_discrepancy <= 1e-14, zero.max_discrepancy, 1e-14);
  }

  const double lin_tol = sp.number("linear_tolerance");
  const LinearModeResult lin =
      linear_mode_check(dd, sp.integer("linear_n"), sp.number("linear_dt"), sp.number("t_end"), scheme);
  auto lin_table = cx.open("dd_linear_mode.csv");
  lin_table << "n,dt,same_scheme,difdis_vs_exact,difdisred_vs_exact\n";
  lin_table << fmt::format("{},{},{},{},{}\n", sp.integer("linear_n"), num(sp.number("linear_dt")),
                           num(lin.same_scheme), num(lin.difdis_vs_exact), num(lin.difdisred_vs_exact));
  cx.verdict(8, "linear_mode_discrepancy", lin.same_scheme < lin_tol, lin.same_scheme, lin_tol);
  cx.verdict(8, "linear_mode_difdis_closed_form", lin.difdis_vs_exact < lin_tol, lin.difdis_vs_exact, lin_tol);
  cx.verdict(8, "linear_mode_difdisred_closed_form", lin.difdisred_vs_exact < lin_tol, lin.difdisred_vs_exact,
             lin_tol);

  cx.plot("dd_equivalence.svg", {series}, {"Equivalence discrepancy", "dt", "discrepancy", true, true});
}

// --- manufactured solution ------------------------------------------------------------

void mms_pipeline(Context& cx) {
  const auto& sp = cx.spec;
  const int dim = natural_dim(sp.text("model"), sp.integer("dim"));
  const ModelPtr model = build_model(sp.text("model"), dim, sp.model_params());
  const double eps = sp.number("epsilon"), t_end = sp.number("t_end");
  const ManufacturedSolution mms(model, eps, sp.number("amplitude"), sp.number("beta"), sp.integer("fine_N"));

  const auto solve = [&](int N, double dt, Scheme scheme) {
    SolverConfig cfg = model_config(model, N, dt, t_end, scheme, eps, std::numeric_limits<int>::max(), std::nullopt);
    cfg.forcing = mms.forcing(N);
    return mms.error(run(cfg, mms.initial(N)).final_state);
  };

  const double tol = sp.number("tolerance");
  auto space = cx.open("mms_space.csv");
  space << "N,dt,error\n";
  PlotSeries sp_series{"error", {}, {}};
  std::optional<double> at_32;
  double best = INFINITY;
  for (int N : sp.integers("ladder")) {
    const double err = solve(N, sp.number("dt"), Scheme::IF_RK4);
    space << fmt::format("{},{},{}\n", N, num(sp.number("dt")), num(err));
    sp_series.x.push_back(N);
    sp_series.y.push_back(err);
    if (N <= 32) best = std::min(best, err);
    if (N == 32) at_32 = err;
  }
  cx.verdict(9, "spatial_error_by_N32", best < tol, best, tol,
             at_32 ? fmt::format("error at N = 32: {:.3e}", *at_32) : "N = 32 not in the ladder");

  auto time = cx.open("mms_time.csv");
  time << "scheme,N,dt,error\n";
  std::vector<PlotSeries> time_plot;
  for (const auto& [scheme, key, order_key] :
       {std::tuple{Scheme::IF_RK4, "rk4_ladder", "rk4_min_order"},
        std::tuple{Scheme::IMEX_CNAB2, "cnab2_ladder", "cnab2_min_order"}}) {
    const auto dts = sp.numbers(key);
    std::vector<double> errs;
    PlotSeries ps{std::string(to_string(scheme)), {}, {}};
    for (double dt : dts) {
      errs.push_back(solve(sp.integer("time_N"), dt, scheme));
      time << fmt::format("{},{},{},{}\n", to_string(scheme), sp.integer("time_N"), num(dt), num(errs.back()));
      ps.x.push_back(dt);
      ps.y.push_back(errs.back());
    }
    const double order = fitted_order(dts, errs);
    cx.verdict(9, fmt::format("{}_temporal_order", to_string(scheme)), order >= sp.number(order_key), order,
               sp.number(order_key));
    time_plot.push_back(std::move(ps));
  }
  cx.plot("mms_space.svg", {sp_series}, {"Manufactured solution: spatial error", "N", "error", false, true});
  cx.plot("mms_time.svg", time_plot, {"Manufactured solution: temporal error", "dt", "error", true, true});
}

void write_verdicts(std::ostream& out, const std::vector<Verdict>& verdicts) {
  out << "criterion,name,value,tolerance,pass,detail\n";
  for (const auto& v : verdicts)
    out << fmt::format("{},{},{},{},{},{}\n", v.criterion, cell(v.name), num(v.value), num(v.tolerance),
                       v.pass ? 1 : 0, cell(v.detail));
}

}  // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec, const std::filesystem::path& output_dir) {
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", output_dir.string(), ec.message()));

  ExperimentReport report;
  report.id = spec.id;
  report.label = spec.label;
  report.hash = spec.hash();
  Context cx(spec, output_dir, report);
  try {
    switch (spec.id) {
      case ExperimentId::EnergyIdentity:
      case ExperimentId::EnergyConservation: energy_pipeline(cx); break;
      case ExperimentId::H1Propagation:
      case ExperimentId::ModulatedInequality: modulated_pipeline(cx); break;
      case ExperimentId::GalerkinCauchy: galerkin_pipeline(cx); break;
      case ExperimentId::RegularityMonitor: regularity_pipeline(cx); break;
      case ExperimentId::Dispersion: dispersion_pipeline(cx); break;
      case ExperimentId::OscillationOracle: oscillation_pipeline(cx); break;
      case ExperimentId::WeakLimits: weak_limits_pipeline(cx); break;
      case ExperimentId::DDEquivalence: dd_pipeline(cx); break;
      case ExperimentId::MMSConvergence: mms_pipeline(cx); break;
    }
  } catch (const BlowUpError& e) {
    throw BlowUpError(fmt::format("{}\nconfiguration:\n{}", e.what(), spec.canonical()), e.time());
  }

  {
    auto out = cx.open("verdicts.csv");
    write_verdicts(out, report.verdicts);
  }
  std::ofstream manifest(output_dir / "manifest.txt", std::ios::binary);
  if (!manifest) throw IoError(fmt::format("cannot write manifest in {}", output_dir.string()));
  manifest << fmt::format("id = {}\nlabel = {}\nhash = {:016x}\npass = {}\n", to_string(spec.id), spec.label,
                          report.hash, report.pass() ? "true" : "false");
  report.facts = cx.extra();
  for (const auto& [k, v] : report.facts) manifest << fmt::format("{} = {}\n", k, v);
  manifest << "\n[config]\n" << spec.canonical() << "\n[artifacts]\n";
  for (const auto& a : report.artifacts) manifest << a << "\n";
  report.artifacts.push_back("manifest.txt");
  return report;
}

}  // namespace kvsim

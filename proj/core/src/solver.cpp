#include "kvsim/solver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "kvsim/checkpoint.hpp"
#include "kvsim/errors.hpp"

namespace kvsim {

std::string_view to_string(Scheme s) noexcept { return s == Scheme::IF_RK4 ? "IF_RK4" : "IMEX_CNAB2"; }

Scheme parse_scheme(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "IF_RK4") return Scheme::IF_RK4;
  if (upper == "IMEX_CNAB2") return Scheme::IMEX_CNAB2;
  throw PreconditionError(fmt::format("unknown scheme '{}' (expected IF_RK4 or IMEX_CNAB2)", text));
}

// ---------------------------------------------------------------------------

namespace {

SpectralField deformation_of(const SpectralField& y, const Matrix& Fbar) {
  const int d = y.dim();
  const ModeSet& modes = y.modes();
  SpectralField F(modes, FieldShape::Matrix);
  for (int i = 0; i < d; ++i) {
    auto yi = y.component(i);
    for (int a = 0; a < d; ++a) {
      auto dst = F.component(i * d + a);
      for (std::size_t m = 0; m < modes.count(); ++m) {
        const double k = modes.wavevector(m)[static_cast<std::size_t>(a)];
        dst[m] = Complex(-k * yi[m].imag(), k * yi[m].real());
      }
      dst[modes.zero_index()] = Complex(Fbar(i, a), 0.0);
    }
  }
  return F;
}

}  // namespace

KVState KVState::zero(int dim, int N, const Matrix& Fbar) {
  if (Fbar.dim() != dim) throw ShapeError("Fbar dimension does not match the state dimension");
  KVState s;
  s.v = SpectralField(dim, N, FieldShape::Vector);
  s.y = SpectralField(dim, N, FieldShape::Vector);
  s.Fbar = Fbar;
  return s;
}

SpectralField KVState::deformation() const { return deformation_of(y, Fbar); }

SpectralField KVState::deformation_curl() const {
  if (dim() != 2) throw ShapeError("deformation_curl requires d = 2");
  const ModeSet& modes = y.modes();
  SpectralField c(modes, FieldShape::Vector);
  for (int i = 0; i < 2; ++i) {
    for (std::size_t m = 0; m < modes.count(); ++m) {
      const Wavevector k = modes.wavevector(m);
      // curl_i = d_1 F_{i2} - d_2 F_{i1} with F_{ia} = d_a y_i; the symbols multiply first.
      const long symbol = -static_cast<long>(k[0]) * k[1] + static_cast<long>(k[1]) * k[0];
      c(i, m) = static_cast<double>(symbol) * y(i, m);
    }
  }
  return c;
}

// ---------------------------------------------------------------------------

std::array<double, 4> exp2x2(double a, double b, double c, double d, double h) {
  const double s = 0.5 * (a + d);
  const double r = 0.5 * (a - d);
  const double disc = r * r + b * c;
  double even = 0.0;  // e^{sh} cosh(ph)
  double odd = 0.0;   // e^{sh} sinh(ph) / p
  if (disc >= 0.0) {
    const double p = std::sqrt(disc);
    const double x = p * h;
    const double ep = std::exp((s + p) * h);
    const double em = std::exp((s - p) * h);
    even = 0.5 * (ep + em);
    if (x > 0.5) {
      odd = (ep - em) / (2.0 * p);
    } else {
      const double shc = x == 0.0 ? 1.0 : std::sinh(x) / x;
      odd = std::exp(s * h) * h * shc;
    }
  } else {
    const double w = std::sqrt(-disc);
    const double x = w * h;
    const double es = std::exp(s * h);
    even = es * std::cos(x);
    odd = es * h * (std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x);
  }
  return {even + odd * (a - s), odd * b, odd * c, even + odd * (d - s)};
}

// ---------------------------------------------------------------------------

void SeparableForcing::add_term(std::function<double(double)> time_factor, SpectralField spatial) {
  if (!space_.empty() && !space_.front().same_layout(spatial))
    throw ShapeError("forcing terms must share one layout");
  if (spatial.shape() != FieldShape::Vector) throw ShapeError("forcing terms must be vector fields");
  time_.push_back(std::move(time_factor));
  space_.push_back(std::move(spatial));
}

void SeparableForcing::evaluate(double t, SpectralField& out) const {
  out.set_zero();
  for (std::size_t j = 0; j < space_.size(); ++j) out.axpy(time_[j](t), space_[j]);
}

// ---------------------------------------------------------------------------

struct Integrator::ModeTables {
  std::vector<std::array<double, kMaxDim>> k;
  // Lawson RK4: exp(L h/2), exp(L h).
  std::vector<std::array<double, 4>> half;
  std::vector<std::array<double, 4>> full;
  // CNAB2: X+ = A X + b N (N entering the v row), and the IMEX Euler start.
  std::vector<std::array<double, 4>> cn_A;
  std::vector<std::array<double, 2>> cn_b;
  std::vector<std::array<double, 4>> eu_A;
  std::vector<std::array<double, 2>> eu_b;
};

namespace {

// With P = I - theta h L: A = P^{-1}(I + (1 - theta) h L) and bcol = h P^{-1} e_2.
void implicit_tables(double a, double b, double c, double d, double h, double theta, std::array<double, 4>& A,
                     std::array<double, 2>& bcol) {
  const double m00 = 1.0 - theta * h * a, m01 = -theta * h * b;
  const double m10 = -theta * h * c, m11 = 1.0 - theta * h * d;
  const double det = m00 * m11 - m01 * m10;
  const double i00 = m11 / det, i01 = -m01 / det, i10 = -m10 / det, i11 = m00 / det;
  const double e = (1.0 - theta) * h;
  const double p00 = 1.0 + e * a, p01 = e * b, p10 = e * c, p11 = 1.0 + e * d;
  A = {i00 * p00 + i01 * p10, i00 * p01 + i01 * p11, i10 * p00 + i11 * p10, i10 * p01 + i11 * p11};
  bcol = {h * i01, h * i11};
}

}  // namespace

Integrator::Integrator(ModelPtr model, const Grid& grid, LinearSymbol symbol, Scheme scheme, double dt,
                       ForcingPtr forcing)
    : model_(std::move(model)), symbol_(symbol), scheme_(scheme), dt_(dt), forcing_(std::move(forcing)),
      transform_(std::make_unique<FourierTransform>(grid)), tables_(std::make_unique<ModeTables>()) {
  if (!model_) throw PreconditionError("integrator needs a stored-energy model");
  if (model_->dim() != grid.dim())
    throw ShapeError(fmt::format("model '{}' is {}-dimensional but the grid is {}-dimensional", model_->id(),
                                 model_->dim(), grid.dim()));
  if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
  const ModeSet& modes = grid.modes();
  const std::size_t n = modes.count();
  auto& T = *tables_;
  T.k.resize(n);
  T.half.resize(n);
  T.full.resize(n);
  T.cn_A.resize(n);
  T.cn_b.resize(n);
  T.eu_A.resize(n);
  T.eu_b.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    const Wavevector k = modes.wavevector(m);
    for (int a = 0; a < kMaxDim; ++a) T.k[m][static_cast<std::size_t>(a)] = k[static_cast<std::size_t>(a)];
    const double q = static_cast<double>(modes.squared_norm(m));
    double a = -symbol.alpha * q, b = 1.0, c = -symbol.gamma * q * q, d = -symbol.beta * q;
    if (m == modes.zero_index()) a = b = c = d = 0.0;
    T.half[m] = exp2x2(a, b, c, d, 0.5 * dt);
    T.full[m] = exp2x2(a, b, c, d, dt);
    implicit_tables(a, b, c, d, dt, 0.5, T.cn_A[m], T.cn_b[m]);
    implicit_tables(a, b, c, d, dt, 1.0, T.eu_A[m], T.eu_b[m]);
  }
  if (forcing_) forcing_buffer_ = SpectralField(modes, FieldShape::Vector);
}

Integrator::~Integrator() = default;

const Grid& Integrator::grid() const noexcept { return transform_->grid(); }
FourierTransform& Integrator::transform() noexcept { return *transform_; }

void Integrator::nonlinear(double t, const SpectralField& y, const Matrix& Fbar, SpectralField& out,
                           double* potential) {
  const SpectralField F = deformation_of(y, Fbar);
  const SpectralField S = transform_->nonlinear_stress(*model_, F, t, potential);
  const int d = y.dim();
  const std::size_t n = y.mode_count();
  if (!out.same_layout(y)) out = SpectralField(y.modes(), FieldShape::Vector);
  const auto& K = tables_->k;
  for (int i = 0; i < d; ++i) {
    auto dst = out.component(i);
    for (std::size_t m = 0; m < n; ++m) {
      Complex acc{};
      for (int a = 0; a < d; ++a) acc += K[m][static_cast<std::size_t>(a)] * S(i * d + a, m);
      dst[m] = Complex(-acc.imag(), acc.real());
    }
  }
  if (forcing_) {
    forcing_->evaluate(t, forcing_buffer_);
    out += forcing_buffer_;
  }
  out.enforce_hermitian();
}

Derivative Integrator::rhs(const KVState& s) {
  Derivative out{SpectralField(s.v.modes(), FieldShape::Vector), SpectralField(s.v.modes(), FieldShape::Vector)};
  nonlinear(s.t, s.y, s.Fbar, out.dv);
  const ModeSet& modes = s.v.modes();
  for (int i = 0; i < s.dim(); ++i) {
    for (std::size_t m = 0; m < modes.count(); ++m) {
      if (m == modes.zero_index()) continue;
      const double q = static_cast<double>(modes.squared_norm(m));
      out.dy(i, m) = -symbol_.alpha * q * s.y(i, m) + s.v(i, m);
      out.dv(i, m) += -symbol_.gamma * q * q * s.y(i, m) - symbol_.beta * q * s.v(i, m);
    }
  }
  return out;
}

void Integrator::step(KVState& s) {
  if (!(s.v.modes() == grid().modes()) || !(s.y.modes() == grid().modes()))
    throw ShapeError("state resolution does not match the integrator grid");
  if (scheme_ == Scheme::IF_RK4) step_rk4(s);
  else step_cnab2(s);
  s.v.enforce_hermitian();
  s.y.enforce_hermitian();
}

void Integrator::step_rk4(KVState& s) {
  const double h = dt_;
  const int d = s.dim();
  const std::size_t n = s.v.mode_count();
  const auto& H = tables_->half;
  const auto& E = tables_->full;
  SpectralField k1, k2, k3, k4;
  SpectralField ys(s.y.modes(), FieldShape::Vector);

  double potential = 0.0;
  nonlinear(s.t, s.y, s.Fbar, k1, &potential);
  pre_step_energy_ = 0.5 * std::pow(l2_norm(s.v), 2) + potential;
  for (int i = 0; i < d; ++i)
    for (std::size_t m = 0; m < n; ++m) ys(i, m) = H[m][0] * s.y(i, m) + H[m][1] * (s.v(i, m) + 0.5 * h * k1(i, m));
  nonlinear(s.t + 0.5 * h, ys, s.Fbar, k2);
  for (int i = 0; i < d; ++i)
    for (std::size_t m = 0; m < n; ++m) ys(i, m) = H[m][0] * s.y(i, m) + H[m][1] * s.v(i, m);
  nonlinear(s.t + 0.5 * h, ys, s.Fbar, k3);
  for (int i = 0; i < d; ++i)
    for (std::size_t m = 0; m < n; ++m)
      ys(i, m) = E[m][0] * s.y(i, m) + E[m][1] * s.v(i, m) + h * H[m][1] * k3(i, m);
  nonlinear(s.t + h, ys, s.Fbar, k4);

  const double w = h / 6.0;
  for (int i = 0; i < d; ++i) {
    for (std::size_t m = 0; m < n; ++m) {
      const Complex y0 = s.y(i, m), v0 = s.v(i, m);
      const Complex mid = k2(i, m) + k3(i, m);
      s.y(i, m) = E[m][0] * y0 + E[m][1] * v0 + w * (E[m][1] * k1(i, m) + 2.0 * H[m][1] * mid);
      s.v(i, m) = E[m][2] * y0 + E[m][3] * v0 + w * (E[m][3] * k1(i, m) + 2.0 * H[m][3] * mid + k4(i, m));
    }
  }
}

void Integrator::step_cnab2(KVState& s) {
  const int d = s.dim();
  const std::size_t n = s.v.mode_count();
  SpectralField Nn;
  double potential = 0.0;
  nonlinear(s.t, s.y, s.Fbar, Nn, &potential);
  pre_step_energy_ = 0.5 * std::pow(l2_norm(s.v), 2) + potential;
  const bool first = !history_.has_value();
  const auto& A = first ? tables_->eu_A : tables_->cn_A;
  const auto& b = first ? tables_->eu_b : tables_->cn_b;
  for (int i = 0; i < d; ++i) {
    for (std::size_t m = 0; m < n; ++m) {
      const Complex drive = first ? Nn(i, m) : 1.5 * Nn(i, m) - 0.5 * (*history_)(i, m);
      const Complex y0 = s.y(i, m), v0 = s.v(i, m);
      s.y(i, m) = A[m][0] * y0 + A[m][1] * v0 + b[m][0] * drive;
      s.v(i, m) = A[m][2] * y0 + A[m][3] * v0 + b[m][1] * drive;
    }
  }
  history_ = std::move(Nn);
}

// ---------------------------------------------------------------------------

double total_energy(const KVState& s, const StoredEnergyModel& model, FourierTransform& transform) {
  const double kinetic = 0.5 * std::pow(l2_norm(s.v), 2);
  const PhysicalField F = transform.inverse(s.deformation());
  const int nc = F.components;
  const std::size_t np = F.points;
  std::array<double, kMaxDim * kMaxDim> Fp{};
  const std::span<const double> Fspan(Fp.data(), static_cast<std::size_t>(nc));
  double sum = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    for (int c = 0; c < nc; ++c) Fp[static_cast<std::size_t>(c)] = F.values[static_cast<std::size_t>(c) * np + p];
    sum += model.energy(Fspan);
  }
  return kinetic + sum * transform.grid().cell_volume();
}

// ---------------------------------------------------------------------------

void SolverConfig::validate() const {
  if (dim < 1 || dim > kMaxDim) throw PreconditionError(fmt::format("dim must be 1, 2 or 3 (got {})", dim));
  if (N < 1) throw PreconditionError(fmt::format("N must be >= 1 (got {})", N));
  if (!(dt > 0.0)) throw PreconditionError(fmt::format("dt must be > 0 (got {})", dt));
  if (!(t_end > 0.0)) throw PreconditionError(fmt::format("t_end must be > 0 (got {})", t_end));
  if (!(epsilon > 0.0)) throw PreconditionError(fmt::format("epsilon must be > 0 (got {})", epsilon));
  if (record_every < 1) throw PreconditionError(fmt::format("record_every must be >= 1 (got {})", record_every));
  if (capillarity < 0.0) throw PreconditionError("capillarity must be >= 0");
  if (checkpoint_every < 0) throw PreconditionError("checkpoint_every must be >= 0");
  if (checkpoint_every > 0 && checkpoint_dir.empty())
    throw PreconditionError("checkpoint_every requires checkpoint_dir");
  step_count();
}

ModelPtr SolverConfig::resolve_model() const {
  ModelPtr m = model ? model : make_model(model_id, model_params);
  if (m->dim() != dim)
    throw PreconditionError(fmt::format("model '{}' has dimension {} but the run has dim = {}", m->id(), m->dim(), dim));
  return m;
}

Grid SolverConfig::grid(const StoredEnergyModel& m) const {
  if (grid_points) return Grid(dim, N, *grid_points);
  return Grid::for_degree(dim, N, padding_degree ? padding_degree : m.stress_degree());
}

long SolverConfig::step_count() const {
  const double ratio = t_end / dt;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(static_cast<double>(n) - ratio) > 1e-9 * std::max(1.0, ratio))
    throw PreconditionError(fmt::format("t_end = {} is not an integer multiple of dt = {}", t_end, dt));
  return n;
}

// ---------------------------------------------------------------------------

namespace {

RunOutcome run_loop(const SolverConfig& config, LinearSymbol symbol, KVState state,
                    std::optional<SpectralField> history, const RecordFn& on_record) {
  config.validate();
  const ModelPtr model = config.resolve_model();
  const Grid grid = config.grid(*model);
  if (state.dim() != config.dim || state.N() != config.N || !(state.y.modes() == state.v.modes()))
    throw ShapeError(fmt::format("initial state (d = {}, N = {}) does not match the configuration (d = {}, N = {})",
                                 state.dim(), state.N(), config.dim, config.N));
  Integrator integrator(model, grid, symbol, config.scheme, config.dt, config.forcing);
  integrator.set_history(std::move(history));

  const double E0 = total_energy(state, *model, integrator.transform());
  const double threshold = config.blowup_threshold.value_or(1e3 * std::abs(E0) + 1.0);
  const long start = std::lround(state.t / config.dt);
  const long total = config.step_count();
  if (start > total) throw PreconditionError("initial time lies beyond t_end");

  const auto guard = [&](double E, double t) {
    if (!std::isfinite(E) || E > threshold)
      throw BlowUpError(fmt::format("energy {:.6g} exceeded the guard {:.6g} at t = {:.6g} (model {}, N = {}, dt = {})",
                                    E, threshold, t, model->id(), config.N, config.dt),
                        t);
  };

  if (on_record && start % config.record_every == 0) on_record(state, integrator);
  for (long g = start + 1; g <= total; ++g) {
    // The step itself measures the energy of the state it starts from, so the
    // guard for level g-1 is checked here and the final level after the loop.
    integrator.step(state);
    guard(integrator.pre_step_energy(), static_cast<double>(g - 1) * config.dt);
    state.t = static_cast<double>(g) * config.dt;
    if (on_record && (g % config.record_every == 0 || g == total)) on_record(state, integrator);
    if (config.checkpoint_every > 0 && g % config.checkpoint_every == 0 && g != total)
      write_checkpoint(config.checkpoint_dir / fmt::format("step_{:08d}", g), state, integrator,
                       fmt::format("model = {}\nN = {}\ndt = {:.17g}\nscheme = {}\nepsilon = {:.17g}\n", model->id(),
                                   config.N, config.dt, to_string(config.scheme), config.epsilon));
  }
  guard(total_energy(state, *model, integrator.transform()), state.t);
  return {std::move(state), total - start};
}

}  // namespace

RunOutcome run(const SolverConfig& config, KVState initial, const RecordFn& on_record) {
  return run_loop(config, LinearSymbol{0.0, config.epsilon, config.capillarity}, std::move(initial), std::nullopt,
                  on_record);
}

RunOutcome run_with_symbol(const SolverConfig& config, LinearSymbol symbol, KVState initial,
                           const RecordFn& on_record) {
  return run_loop(config, symbol, std::move(initial), std::nullopt, on_record);
}

RunOutcome resume(const SolverConfig& config, Checkpoint checkpoint, const RecordFn& on_record) {
  return run_loop(config, LinearSymbol{0.0, config.epsilon, config.capillarity}, std::move(checkpoint.state),
                  std::move(checkpoint.history), on_record);
}

// ---------------------------------------------------------------------------

void write_checkpoint(const std::filesystem::path& dir, const KVState& state, const Integrator& integrator,
                      std::string_view config_echo) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create checkpoint directory '{}': {}", dir.string(), ec.message()));
  write_snapshot(dir / "v.kvsf", state.v, state.t);
  write_snapshot(dir / "y.kvsf", state.y, state.t);
  SpectralField fbar(state.dim(), 0, FieldShape::Matrix);
  for (int i = 0; i < state.dim(); ++i)
    for (int a = 0; a < state.dim(); ++a) fbar(i * state.dim() + a, 0) = Complex(state.Fbar(i, a), 0.0);
  write_snapshot(dir / "Fbar.kvsf", fbar, state.t);
  if (integrator.history()) write_snapshot(dir / "history.kvsf", *integrator.history(), state.t);

  std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
  if (!manifest) throw IoError(fmt::format("cannot write manifest in '{}'", dir.string()));
  manifest << fmt::format("time = {:.17g}\n", state.t);
  manifest << "fields = v.kvsf y.kvsf Fbar.kvsf" << (integrator.history() ? " history.kvsf" : "") << "\n";
  manifest << config_echo;
}

Checkpoint read_checkpoint(const std::filesystem::path& dir) {
  Checkpoint cp;
  FieldSnapshot v = read_snapshot(dir / "v.kvsf");
  FieldSnapshot y = read_snapshot(dir / "y.kvsf");
  FieldSnapshot fbar = read_snapshot(dir / "Fbar.kvsf");
  if (!v.field.same_layout(y.field) || v.field.shape() != FieldShape::Vector)
    throw IoError(fmt::format("checkpoint '{}' has inconsistent v/y fields", dir.string()));
  if (fbar.field.shape() != FieldShape::Matrix || fbar.field.dim() != v.field.dim() || fbar.field.N() != 0)
    throw IoError(fmt::format("checkpoint '{}' has a malformed Fbar field", dir.string()));
  const int d = v.field.dim();
  cp.state.t = v.time;
  cp.state.v = std::move(v.field);
  cp.state.y = std::move(y.field);
  cp.state.Fbar = Matrix(d);
  for (int i = 0; i < d; ++i)
    for (int a = 0; a < d; ++a) cp.state.Fbar(i, a) = fbar.field(i * d + a, 0).real();
  if (std::filesystem::exists(dir / "history.kvsf")) cp.history = read_snapshot(dir / "history.kvsf").field;
  return cp;
}

}  // namespace kvsim

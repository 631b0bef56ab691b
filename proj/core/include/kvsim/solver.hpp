#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kvsim/spectral.hpp"
#include "kvsim/stored_energy.hpp"

namespace kvsim {

enum class Scheme { IF_RK4, IMEX_CNAB2 };

std::string_view to_string(Scheme s) noexcept;
/// Accepts "IF_RK4" and "IMEX_CNAB2" (case-insensitive). Throws PreconditionError otherwise.
Scheme parse_scheme(std::string_view text);

/// Solver state. The deformation gradient is F = Fbar + grad y, so curl F = 0
/// holds by construction. `v` is the velocity (or, for the reduced
/// diffusion-dispersion system, the transformed velocity w).
struct KVState {
  double t = 0.0;
  SpectralField v;
  SpectralField y;
  Matrix Fbar;

  /// Zero fields at resolution N with mean deformation Fbar.
  static KVState zero(int dim, int N, const Matrix& Fbar);

  int dim() const noexcept { return v.dim(); }
  int N() const noexcept { return v.N(); }
  /// F_k = i y_k (x) k for k != 0, F_0 = Fbar.
  SpectralField deformation() const;
  /// Row curls of F evaluated through the composed symbol (i k_a)(i k_b) - (i k_b)(i k_a).
  /// Exactly zero for every representable state. Requires d = 2.
  SpectralField deformation_curl() const;
};

/// Per-mode linear part acting on (y_k, v_k) with q = |k|^2:
///   L(q) = [[-alpha q, 1], [-gamma q^2, -beta q]]
/// Kelvin-Voigt: alpha = 0, beta = eps, gamma = 0. Capillarity adds gamma = delta A.
/// The reduced system uses alpha = kappa, beta = eps - kappa, gamma = 0.
/// The mean mode is exempt: y_0 is frozen and v_0 only sees the forcing.
struct LinearSymbol {
  double alpha = 0.0;
  double beta = 1.0;
  double gamma = 0.0;
};

/// exp(h L) for a real 2x2 matrix L = [[a, b], [c, d]], row-major.
std::array<double, 4> exp2x2(double a, double b, double c, double d, double h);

/// Momentum source f(t), returned as a vector field of the solver's resolution.
class Forcing {
 public:
  virtual ~Forcing() = default;
  virtual void evaluate(double t, SpectralField& out) const = 0;
};
using ForcingPtr = std::shared_ptr<const Forcing>;

/// Forcing of the separable form f(t, x) = sum_j g_j(t) f_j(x).
class SeparableForcing final : public Forcing {
 public:
  void add_term(std::function<double(double)> time_factor, SpectralField spatial);
  void evaluate(double t, SpectralField& out) const override;

 private:
  std::vector<std::function<double(double)>> time_;
  std::vector<SpectralField> space_;
};

struct Derivative {
  SpectralField dv;
  SpectralField dy;
};

/// Time stepper for the Galerkin system on a fixed grid.
class Integrator {
 public:
  Integrator(ModelPtr model, const Grid& grid, LinearSymbol symbol, Scheme scheme, double dt,
             ForcingPtr forcing = nullptr);
  ~Integrator();
  Integrator(const Integrator&) = delete;
  Integrator& operator=(const Integrator&) = delete;

  const Grid& grid() const noexcept;
  const StoredEnergyModel& model() const noexcept { return *model_; }
  Scheme scheme() const noexcept { return scheme_; }
  double dt() const noexcept { return dt_; }
  const LinearSymbol& symbol() const noexcept { return symbol_; }
  FourierTransform& transform() noexcept;

  /// Nonlinear momentum term i S_k . k + f_k at time t.
  /// When `potential` is given it receives the grid quadrature of W(F).
  void nonlinear(double t, const SpectralField& y, const Matrix& Fbar, SpectralField& out,
                 double* potential = nullptr);
  /// Full right-hand side: dy/dt and dv/dt.
  Derivative rhs(const KVState& state);
  /// Advances the state by one step of size dt.
  void step(KVState& state);

  /// Adams-Bashforth history (IMEX_CNAB2 only); empty before the first step.
  const std::optional<SpectralField>& history() const noexcept { return history_; }
  void set_history(std::optional<SpectralField> h) { history_ = std::move(h); }

  /// Total energy of the state handed to the most recent step(), obtained
  /// from the first stress evaluation of that step at no extra transform cost.
  double pre_step_energy() const noexcept { return pre_step_energy_; }

 private:
  struct ModeTables;
  void step_rk4(KVState& s);
  void step_cnab2(KVState& s);

  ModelPtr model_;
  LinearSymbol symbol_;
  Scheme scheme_;
  double dt_;
  ForcingPtr forcing_;
  std::unique_ptr<FourierTransform> transform_;
  std::unique_ptr<ModeTables> tables_;
  std::optional<SpectralField> history_;
  SpectralField forcing_buffer_;
  double pre_step_energy_ = 0.0;
};

/// E = 1/2 ||v||^2 + quadrature of W(F) on the transform's grid.
double total_energy(const KVState& state, const StoredEnergyModel& model, FourierTransform& transform);

struct SolverConfig {
  int dim = 2;
  int N = 16;
  double dt = 1e-2;
  double t_end = 1.0;
  Scheme scheme = Scheme::IF_RK4;
  double epsilon = 1.0;
  std::string model_id = "quadratic";
  ParamMap model_params;
  /// Overrides model_id/model_params when set.
  ModelPtr model;
  ForcingPtr forcing;
  int record_every = 10;
  /// Energy cap; defaults to 1e3 |E(0)| + 1.
  std::optional<double> blowup_threshold;
  /// Physical points per axis; chosen from the model's stress degree when absent.
  std::optional<int> grid_points;
  /// Polynomial degree used for the padding when grid_points is absent; defaults to the model's.
  std::optional<int> padding_degree;
  /// Capillarity coefficient delta*A of the diffusion-dispersion system (0 for plain Kelvin-Voigt).
  double capillarity = 0.0;
  /// Write a checkpoint every this many steps (0 disables).
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  void validate() const;
  ModelPtr resolve_model() const;
  Grid grid(const StoredEnergyModel& model) const;
  long step_count() const;
};

/// Called after step 0 and every record_every steps (and after the last step).
using RecordFn = std::function<void(const KVState&, Integrator&)>;

struct RunOutcome {
  KVState final_state;
  long steps = 0;
};

/// Integrates from `initial` to t_end with the Kelvin-Voigt symbol (alpha = 0,
/// beta = epsilon, gamma = capillarity). Throws BlowUpError when the energy
/// exceeds the guard.
RunOutcome run(const SolverConfig& config, KVState initial, const RecordFn& on_record = {});
/// Same loop with an explicit linear symbol (used by the reduced system).
RunOutcome run_with_symbol(const SolverConfig& config, LinearSymbol symbol, KVState initial,
                           const RecordFn& on_record = {});

/// Writes v.kvsf, y.kvsf, Fbar.kvsf (and history.kvsf for CNAB2) plus a text manifest.
void write_checkpoint(const std::filesystem::path& dir, const KVState& state, const Integrator& integrator,
                      std::string_view config_echo = {});

struct Checkpoint {
  KVState state;
  std::optional<SpectralField> history;
};
Checkpoint read_checkpoint(const std::filesystem::path& dir);

/// Continues a run from a checkpoint up to config.t_end; the continued
/// trajectory is identical to the uninterrupted one.
RunOutcome resume(const SolverConfig& config, Checkpoint checkpoint, const RecordFn& on_record = {});

}  // namespace kvsim

#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kvsim/piecewise_stress.hpp"
#include "kvsim/tensor.hpp"

namespace kvsim {

using ParamMap = std::map<std::string, double, std::less<>>;

/// A stored energy W on d x d matrices with its stress S = DW and Hessian D^2 W.
///
/// Implementations are immutable and safe to share across threads. The span
/// overloads are the hot path used on quadrature grids; `F` and `S` hold
/// row-major d x d entries and `H` holds d^2 x d^2 entries.
class StoredEnergyModel {
 public:
  virtual ~StoredEnergyModel() = default;

  virtual std::string_view id() const noexcept = 0;
  virtual int dim() const noexcept = 0;
  /// Growth exponent p >= 2.
  virtual double growth_exponent() const noexcept = 0;
  /// K >= 0 with D^2 W + K Id positive semidefinite.
  virtual double semiconvexity() const noexcept = 0;
  /// Constant C of the strengthened monotonicity condition, if the model claims it.
  virtual std::optional<double> abprime_constant() const noexcept { return std::nullopt; }
  /// Polynomial degree of S when S is a polynomial in F; drives the dealiasing padding.
  virtual std::optional<int> stress_degree() const noexcept { return std::nullopt; }
  /// inf W (may be -inf for models unbounded below).
  virtual double energy_lower_bound() const noexcept = 0;

  virtual double energy(std::span<const double> F) const noexcept = 0;
  virtual void stress(std::span<const double> F, std::span<double> S) const noexcept = 0;
  virtual void hessian(std::span<const double> F, std::span<double> H) const noexcept = 0;

  double energy(const Matrix& F) const noexcept { return energy(F.flat()); }
  Matrix stress(const Matrix& F) const;
  Hessian hessian(const Matrix& F) const;
};

using ModelPtr = std::shared_ptr<const StoredEnergyModel>;

/// W(F) = mu/2 |F|^2. Convex, p = 2, K = 0.
class QuadraticEnergy final : public StoredEnergyModel {
 public:
  QuadraticEnergy(int dim, double mu);
  std::string_view id() const noexcept override { return "quadratic"; }
  int dim() const noexcept override { return dim_; }
  double growth_exponent() const noexcept override { return 2.0; }
  double semiconvexity() const noexcept override { return 0.0; }
  std::optional<int> stress_degree() const noexcept override { return 1; }
  double energy_lower_bound() const noexcept override {
    return mu_ >= 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  double energy(std::span<const double> F) const noexcept override;
  void stress(std::span<const double> F, std::span<double> S) const noexcept override;
  void hessian(std::span<const double> F, std::span<double> H) const noexcept override;
  double modulus() const noexcept { return mu_; }

 private:
  int dim_;
  double mu_;
};

/// W(F) = 1/4 |F|^4 - alpha/2 |F|^2. p = 4, K = max(alpha, 0).
/// Satisfies the strengthened monotonicity condition with C = 1/2.
class QuarticEnergy final : public StoredEnergyModel {
 public:
  QuarticEnergy(int dim, double alpha, std::string id = "quartic");
  std::string_view id() const noexcept override { return id_; }
  int dim() const noexcept override { return dim_; }
  double growth_exponent() const noexcept override { return 4.0; }
  double semiconvexity() const noexcept override { return alpha_ > 0 ? alpha_ : 0.0; }
  std::optional<double> abprime_constant() const noexcept override { return 0.5; }
  std::optional<int> stress_degree() const noexcept override { return 3; }
  double energy_lower_bound() const noexcept override { return alpha_ > 0 ? -alpha_ * alpha_ / 4.0 : 0.0; }
  double energy(std::span<const double> F) const noexcept override;
  void stress(std::span<const double> F, std::span<double> S) const noexcept override;
  void hessian(std::span<const double> F, std::span<double> H) const noexcept override;
  double alpha() const noexcept { return alpha_; }

 private:
  int dim_;
  double alpha_;
  std::string id_;
};

/// One-dimensional model whose stress is a PiecewiseStress1D and whose energy is its antiderivative.
class PiecewiseEnergy1D final : public StoredEnergyModel {
 public:
  explicit PiecewiseEnergy1D(PiecewiseStress1D law);
  std::string_view id() const noexcept override { return "piecewise"; }
  int dim() const noexcept override { return 1; }
  double growth_exponent() const noexcept override { return 2.0; }
  double semiconvexity() const noexcept override { return semiconvexity_; }
  double energy_lower_bound() const noexcept override { return lower_bound_; }
  double energy(std::span<const double> F) const noexcept override;
  void stress(std::span<const double> F, std::span<double> S) const noexcept override;
  void hessian(std::span<const double> F, std::span<double> H) const noexcept override;
  const PiecewiseStress1D& law() const noexcept { return law_; }

 private:
  PiecewiseStress1D law_;
  double semiconvexity_;
  double lower_bound_;
};

/// The piecewise law used by default: a = 1, b = 3, sigma(u) = u on [3, 6], theta = 1/2.
PiecewiseStress1D default_piecewise_law();

/// Builds a model from its identifier and parameters.
///   quadratic   dim, mu (default 1)
///   quartic     dim (default 2), alpha (default 1)
///   double_well 1-D sigma(u) = u^3 - u
///   piecewise   a (1), b (3), theta (0.5), sigma_right_c0.. (coefficients of sigma on [b,2b], default u)
/// Throws PreconditionError on unknown ids or parameters.
ModelPtr make_model(std::string_view id, const ParamMap& params = {});

struct CatalogEntry {
  std::string id;
  ParamMap params;
  ModelPtr model;
};

/// quadratic (d = 2, mu = 1), quartic (d = 2, alpha = 1), double_well (d = 1), piecewise (d = 1).
std::vector<CatalogEntry> builtin_models();

// ---------------------------------------------------------------------------
// Sampling-based checks of the hypotheses on W.

struct SemiconvexityReport {
  double min_eigenvalue;
  std::size_t argmin_sample;
  bool pass;
};

/// Minimum eigenvalue of D^2 W(F) + K Id over the samples; passes iff >= -1e-10.
SemiconvexityReport check_semiconvexity(const StoredEnergyModel& model, std::span<const Matrix> samples);
/// Same check with an explicit constant K instead of the model's own.
SemiconvexityReport check_semiconvexity(const StoredEnergyModel& model, std::span<const Matrix> samples, double K);

enum class MonotonicityVariant { AB, ABprime };

struct MonotonicityReport {
  /// Most negative slack, normalized by max(1, |F1 - F2|^2 (1 + |F1|^{p-2} + |F2|^{p-2})).
  double worst_violation;
  std::size_t argmin_pair;
  bool pass;
};

/// AB:      (S(F1) - S(F2), F1 - F2) + K |F1 - F2|^2 >= 0
/// ABprime: (S(F1) - S(F2), F1 - F2) - (C (|F1|^{p-2} + |F2|^{p-2}) - K) |F1 - F2|^2 >= 0
MonotonicityReport check_ab_monotonicity(const StoredEnergyModel& model,
                                         std::span<const std::pair<Matrix, Matrix>> pairs,
                                         MonotonicityVariant variant);
MonotonicityReport check_ab_monotonicity(const StoredEnergyModel& model,
                                         std::span<const std::pair<Matrix, Matrix>> pairs,
                                         MonotonicityVariant variant, double C, double K);

struct ConsistencyReport {
  double max_relative_error;
  bool pass;
};

/// Central differences of W against S (tolerance 1e-6) with step h.
ConsistencyReport check_gradient_consistency(const StoredEnergyModel& model, std::span<const Matrix> samples,
                                             double step = 1e-5, double tolerance = 1e-6);
/// Central differences of S against D^2 W (tolerance 1e-5).
ConsistencyReport check_hessian_consistency(const StoredEnergyModel& model, std::span<const Matrix> samples,
                                            double step = 1e-5, double tolerance = 1e-5);
/// Max |H - H^T| relative to max |H| over the samples.
double hessian_asymmetry(const StoredEnergyModel& model, std::span<const Matrix> samples);

struct GrowthReport {
  double c_lower;    // coercivity constant: half the smallest W/|F|^p over the outer quarter of the samples
  double C_lower;    // smallest C with c_lower |F|^p - C <= W(F) on the samples
  double C_energy;   // smallest C with |W| <= C(1 + |F|^p)
  double C_stress;   // smallest C with |S| <= C(1 + |F|^{p-1})
  bool pass;         // every constant finite and c_lower > 0
};

/// Fits the growth constants. The lower bound is read as c|F|^p - C <= W,
/// which is c(|F|^p - 1) <= W up to rescaling the additive constant; the
/// literal form cannot hold for energies that are negative near |F| = 1.

GrowthReport check_growth(const StoredEnergyModel& model, std::span<const Matrix> samples);

/// `count` matrices with entries uniform in [lo, hi], deterministic in `seed`.
std::vector<Matrix> random_matrices(int dim, std::size_t count, double lo, double hi, std::uint64_t seed);
/// Matrices along rays with norms log-spaced up to max_norm (for growth checks).
std::vector<Matrix> radial_samples(int dim, std::size_t count, double max_norm, std::uint64_t seed);

}  // namespace kvsim

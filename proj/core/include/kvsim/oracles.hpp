#pragma once

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kvsim/piecewise_stress.hpp"
#include "kvsim/solver.hpp"

namespace kvsim {

// ---------------------------------------------------------------------------
// Stationary weak solutions with sustained oscillations in one dimension.
//
// F is the 1-periodic function equal to a on (k, k + theta) and b on
// (k + theta, k + 1). For t in [1, 2]
//   U(t, x) = t F(x),   V(t, x) = Vbar(x) = int_0^x F,   Y(t, x) = t Vbar(x)
// and member n of the family is u_n(t, x) = U(t, nx), v_n = V(t, nx) / n,
// y_n = Y(t, nx) / n on x in (0, 1).

class OscillationFamily {
 public:
  /// Rejects laws whose defining condition a + sigma(ta) = b + sigma(tb)
  /// fails on [1, 2] by more than 1e-12, and n < 1.
  OscillationFamily(PiecewiseStress1D sigma, int n = 1);

  double a() const noexcept { return sigma_.a(); }
  double b() const noexcept { return sigma_.b(); }
  double theta() const noexcept { return sigma_.theta(); }
  int n() const noexcept { return n_; }
  const PiecewiseStress1D& sigma() const noexcept { return sigma_; }
  OscillationFamily member(int n) const { return OscillationFamily(sigma_, n); }

  static constexpr double t_min = 1.0;
  static constexpr double t_max = 2.0;

  double F(double x) const noexcept;
  /// a theta + b (1 - theta).
  double Vbar_one() const noexcept;
  double Vbar(double x) const noexcept;
  double U(double t, double x) const noexcept { return t * F(x); }
  double V(double t, double x) const noexcept;
  double Y(double t, double x) const noexcept { return t * Vbar(x); }

  double u(double t, double x) const noexcept { return U(t, n_ * x); }
  double v(double t, double x) const noexcept { return V(t, n_ * x) / n_; }
  double y(double t, double x) const noexcept { return Y(t, n_ * x) / n_; }
  /// d/dx of v_n off the interfaces.
  double v_x(double t, double x) const noexcept;

  /// Interfaces of member n inside [0, 1]: x = k/n and (k + theta)/n.
  std::vector<double> interfaces() const;
  /// Distance from x to the nearest interface of member n.
  double interface_distance(double x) const noexcept;

 private:
  PiecewiseStress1D sigma_;
  int n_;
};

/// max over the samples and both interface kinds of
/// |(sigma(t b) + b) - (sigma(t a) + a)|. Samples must lie in [1, 2].
double verify_rankine_hugoniot(const OscillationFamily& family, const std::vector<double>& t_samples);

struct SpaceTimePoint {
  double t;
  double x;
};

/// Max pointwise residual of u_t - v_x and v_t - sigma(u)_x - v_xx at the
/// given points, using the exact piecewise derivatives. Points closer than
/// 1e-9 to an interface are rejected with PreconditionError.
double verify_classical_residual(const OscillationFamily& family, const std::vector<SpaceTimePoint>& points);

/// max - min over the x samples of sigma(u_n) + d_x v_n at time t.
double stress_flux_spread(const OscillationFamily& family, double t, const std::vector<double>& x_samples);

struct WeakLimitLevel {
  int n = 0;
  double u_mean = 0.0;       // weighted mean of u_n
  double stress_mean = 0.0;  // weighted mean of sigma(u_n)
  double v_l2_gap = 0.0;     // ||v_n - Vbar(1) x||_{L^2(0,1)}
};

struct WeakLimits {
  double t = 1.0;
  std::vector<WeakLimitLevel> levels;
  /// Richardson extrapolations in 1/n over the ladder.
  double u_limit = 0.0;
  double v_gap_limit = 0.0;
  double stress_limit = 0.0;
  /// sigma(u_limit).
  double stress_of_limit = 0.0;
  /// Closed-form values the extrapolations are compared with.
  double u_expected = 0.0;
  double stress_expected = 0.0;
  double max_extrapolation_error = 0.0;
  /// stress_of_limit - stress_limit; nonzero means sigma(u_n) does not converge to sigma of the limit.
  double gap = 0.0;
  bool gap_flagged = false;
};

/// Weak limits at time t. Means are taken against the weight 1 + x on (0, 1),
/// which turns the O(1/n) cell-boundary effect into an exact polynomial in
/// 1/n; every integral is evaluated piecewise exactly.
WeakLimits weak_limits(const OscillationFamily& family, double t, const std::vector<int>& ladder = {4, 8, 16, 32, 64});

/// Repeated Richardson extrapolation to h = 0 of values sampled at h = 1/n,
/// assuming the error expands in integer powers of h.
double richardson_in_inverse_n(const std::vector<int>& n, const std::vector<double>& values);

// ---------------------------------------------------------------------------
// Linear viscoelastic modes: y = exp(i n x + lambda t) solves
// y_tt = kappa y_xx + y_txx when lambda^2 + lambda n^2 + kappa n^2 = 0.

struct DispersionRoots {
  int n = 1;
  double kappa = 1.0;
  /// Slow and fast roots. For complex pairs lambda_plus carries the positive imaginary part.
  std::complex<double> lambda_plus;
  std::complex<double> lambda_minus;
  bool complex_pair = false;
  bool double_root = false;
  /// Large-n expansion -kappa - kappa^2 / n^2 of the slow root (remainder O(n^-4)).
  double asymptotic = 0.0;
  /// The same expansion with the coefficient 2 kappa^2 / n^2 as it appears in print.
  double asymptotic_printed = 0.0;

  /// |(lambda_+ + lambda_-) + n^2| / n^2.
  double vieta_sum_error() const noexcept;
  /// |lambda_+ lambda_- - kappa n^2| / (kappa n^2).
  double vieta_product_error() const noexcept;
};

/// Roots through the cancellation-free form of the quadratic formula.
/// Requires n >= 1 and kappa > 0.
DispersionRoots dispersion_roots(int n, double kappa);

struct LinearDecayReport {
  int n = 1;
  double kappa = 1.0;
  DispersionRoots roots;
  double measured_rate = 0.0;
  /// Re lambda_+.
  double reference_rate = 0.0;
  double rel_error = 0.0;
  /// Max deviation of log|v_n| from the fitted line (after removing log t in the Jordan case).
  double fit_residual = 0.0;
  /// Double root: the data start at rest and |v_n| follows c t e^{lambda t}.
  bool degenerate = false;
  /// Max relative deviation of |v_n| from the exact closed-form envelope.
  double envelope_error = 0.0;
  bool fit_accepted = false;
};

/// Runs the 1-D solver with W = kappa |F|^2 / 2 and epsilon = 1 on a single
/// mode n, starting on the slow eigenvector (y_n = 1/2, v_n = lambda_+ y_n),
/// and fits the decay rate of |v_n(t)| from `samples` equispaced records.
/// Fits whose residual exceeds 1e-6 are marked as not accepted.
LinearDecayReport verify_linear_decay(int n, double kappa, double dt = 1e-5, double t_end = 1.0,
                                      Scheme scheme = Scheme::IF_RK4, int samples = 100);

// ---------------------------------------------------------------------------
// Reporting.

struct OracleCheck {
  std::string id;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Header id,value,tolerance,pass with 17 significant digits.
void write_oracle_csv(std::ostream& out, const std::vector<OracleCheck>& checks);
void write_oracle_csv(const std::filesystem::path& path, const std::vector<OracleCheck>& checks);
/// One line per check: "<id> <value> <tolerance> PASS|FAIL".
void write_oracle_summary(std::ostream& out, const std::vector<OracleCheck>& checks);

}  // namespace kvsim

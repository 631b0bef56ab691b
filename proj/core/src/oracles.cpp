#include "kvsim/oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "kvsim/errors.hpp"

namespace kvsim {

namespace {

double frac(double x) noexcept { return x - std::floor(x); }

// Three-point Gauss-Legendre on [lo, hi]; exact for polynomials of degree 5.
template <class Fn>
double gauss3(double lo, double hi, Fn&& f) {
  static constexpr std::array<double, 3> node{-0.77459666924148337704, 0.0, 0.77459666924148337704};
  static constexpr std::array<double, 3> weight{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  double s = 0.0;
  for (std::size_t i = 0; i < 3; ++i) s += weight[i] * f(mid + half * node[i]);
  return s * half;
}

}  // namespace

OscillationFamily::OscillationFamily(PiecewiseStress1D sigma, int n) : sigma_(std::move(sigma)), n_(n) {
  if (n < 1) throw PreconditionError(fmt::format("oscillation family index must be >= 1 (got {})", n));
  const double defect = sigma_.condition_residual(1001);
  if (!(defect < 1e-12))
    throw PreconditionError(fmt::format(
        "stress law violates a + sigma(ta) = b + sigma(tb) on [1, 2] (max defect {:.3e}, a = {}, b = {})", defect,
        sigma_.a(), sigma_.b()));
}

double OscillationFamily::F(double x) const noexcept { return frac(x) < theta() ? a() : b(); }

double OscillationFamily::Vbar_one() const noexcept { return a() * theta() + b() * (1.0 - theta()); }

double OscillationFamily::Vbar(double x) const noexcept {
  const double k = std::floor(x);
  const double r = x - k;
  const double local = r < theta() ? a() * r : a() * theta() + b() * (r - theta());
  return k * Vbar_one() + local;
}

double OscillationFamily::V(double /*t*/, double x) const noexcept { return Vbar(x); }

double OscillationFamily::v_x(double /*t*/, double x) const noexcept { return F(n_ * x); }

std::vector<double> OscillationFamily::interfaces() const {
  std::vector<double> out;
  for (int k = 0; k <= n_; ++k) {
    out.push_back(static_cast<double>(k) / n_);
    if (k < n_) out.push_back((k + theta()) / n_);
  }
  return out;
}

double OscillationFamily::interface_distance(double x) const noexcept {
  const double r = frac(n_ * x);
  return std::min({r, std::abs(r - theta()), 1.0 - r}) / n_;
}

double verify_rankine_hugoniot(const OscillationFamily& family, const std::vector<double>& t_samples) {
  const double delta = 1e-7 / family.n();
  const auto x_if = family.interfaces();
  double worst = 0.0;
  for (double t : t_samples) {
    if (t < OscillationFamily::t_min || t > OscillationFamily::t_max)
      throw PreconditionError(fmt::format("time {} lies outside [1, 2]", t));
    for (double x : x_if) {
      // One-sided states; u_t = F on each side since U = t F.
      const double left = x - delta, right = x + delta;
      const double jl = family.sigma().sigma(family.u(t, left)) + family.F(family.n() * left);
      const double jr = family.sigma().sigma(family.u(t, right)) + family.F(family.n() * right);
      worst = std::max(worst, std::abs(jr - jl));
    }
  }
  return worst;
}

double verify_classical_residual(const OscillationFamily& family, const std::vector<SpaceTimePoint>& points) {
  const int n = family.n();
  double worst = 0.0;
  for (const auto& p : points) {
    if (family.interface_distance(p.x) < 1e-9)
      throw PreconditionError(fmt::format("point x = {} lies on an interface of member n = {}", p.x, n));
    if (p.t < OscillationFamily::t_min || p.t > OscillationFamily::t_max)
      throw PreconditionError(fmt::format("time {} lies outside [1, 2]", p.t));
    // Inside a phase cell U is linear in t and constant in x, V is affine in x
    // and constant in t.
    const double Fx = family.F(n * p.x);
    const double u_t = Fx;
    const double u_x = 0.0;
    const double v_t = 0.0;
    const double v_x = family.v_x(p.t, p.x);
    const double v_xx = 0.0;
    const double sigma_x = family.sigma().sigma_prime(family.u(p.t, p.x)) * u_x;
    worst = std::max({worst, std::abs(u_t - v_x), std::abs(v_t - sigma_x - v_xx)});
  }
  return worst;
}

double stress_flux_spread(const OscillationFamily& family, double t, const std::vector<double>& x_samples) {
  if (x_samples.empty()) return 0.0;
  double lo = INFINITY, hi = -INFINITY;
  for (double x : x_samples) {
    const double q = family.sigma().sigma(family.u(t, x)) + family.v_x(t, x);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  return hi - lo;
}

double richardson_in_inverse_n(const std::vector<int>& n, const std::vector<double>& values) {
  if (n.size() != values.size() || n.empty()) throw ShapeError("Richardson ladder and values differ in length");
  // Neville's scheme for the interpolating polynomial in h = 1/n, evaluated at h = 0.
  std::vector<double> p = values;
  const std::size_t m = n.size();
  for (std::size_t level = 1; level < m; ++level) {
    for (std::size_t i = 0; i + level < m; ++i) {
      const double hi = 1.0 / n[i], hj = 1.0 / n[i + level];
      p[i] = (hi * p[i + 1] - hj * p[i]) / (hi - hj);
    }
  }
  return p[0];
}

WeakLimits weak_limits(const OscillationFamily& family, double t, const std::vector<int>& ladder) {
  if (t < OscillationFamily::t_min || t > OscillationFamily::t_max)
    throw PreconditionError(fmt::format("time {} lies outside [1, 2]", t));
  WeakLimits out;
  out.t = t;
  const auto& sigma = family.sigma();
  const double weight_total = 1.5;  // int_0^1 (1 + x) dx
  std::vector<double> u_vals, s_vals, g_vals;
  for (int n : ladder) {
    const OscillationFamily member = family.member(n);
    const double V1 = member.Vbar_one();
    WeakLimitLevel level;
    level.n = n;
    double u_int = 0.0, s_int = 0.0, g2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const std::array<double, 3> edges{static_cast<double>(k) / n, (k + member.theta()) / n,
                                        static_cast<double>(k + 1) / n};
      for (std::size_t seg = 0; seg < 2; ++seg) {
        const double lo = edges[seg], hi = edges[seg + 1];
        u_int += gauss3(lo, hi, [&](double x) { return member.u(t, x) * (1.0 + x); });
        s_int += gauss3(lo, hi, [&](double x) { return sigma.sigma(member.u(t, x)) * (1.0 + x); });
        g2 += gauss3(lo, hi, [&](double x) {
          const double e = member.v(t, x) - V1 * x;
          return e * e;
        });
      }
    }
    level.u_mean = u_int / weight_total;
    level.stress_mean = s_int / weight_total;
    level.v_l2_gap = std::sqrt(g2);
    out.levels.push_back(level);
    u_vals.push_back(level.u_mean);
    s_vals.push_back(level.stress_mean);
    g_vals.push_back(level.v_l2_gap);
  }
  out.u_limit = richardson_in_inverse_n(ladder, u_vals);
  out.stress_limit = richardson_in_inverse_n(ladder, s_vals);
  out.v_gap_limit = richardson_in_inverse_n(ladder, g_vals);
  out.stress_of_limit = sigma.sigma(out.u_limit);

  const double th = family.theta();
  out.u_expected = th * family.a() * t + (1.0 - th) * family.b() * t;
  out.stress_expected = th * sigma.sigma(family.a() * t) + (1.0 - th) * sigma.sigma(family.b() * t);
  out.max_extrapolation_error = std::max({std::abs(out.u_limit - out.u_expected),
                                          std::abs(out.stress_limit - out.stress_expected),
                                          std::abs(out.v_gap_limit)});
  out.gap = out.stress_of_limit - out.stress_limit;
  out.gap_flagged = std::abs(out.gap) > 1e-8;
  return out;
}

// ---------------------------------------------------------------------------

double DispersionRoots::vieta_sum_error() const noexcept {
  const double n2 = static_cast<double>(n) * n;
  return std::abs(lambda_plus + lambda_minus + n2) / n2;
}

double DispersionRoots::vieta_product_error() const noexcept {
  const double p = kappa * static_cast<double>(n) * n;
  return std::abs(lambda_plus * lambda_minus - p) / p;
}

DispersionRoots dispersion_roots(int n, double kappa) {
  if (n < 1) throw PreconditionError(fmt::format("wavenumber must be >= 1 (got {})", n));
  if (!(kappa > 0)) throw PreconditionError(fmt::format("elastic modulus must be positive (got {})", kappa));
  DispersionRoots r;
  r.n = n;
  r.kappa = kappa;
  const double n2 = static_cast<double>(n) * n;
  const double disc = n2 * (n2 - 4.0 * kappa);
  if (disc > 0) {
    // The fast root has no cancellation; the slow one follows from the product.
    const double fast = -0.5 * (n2 + std::sqrt(disc));
    r.lambda_minus = fast;
    r.lambda_plus = kappa * n2 / fast;
  } else if (disc == 0) {
    r.double_root = true;
    r.lambda_plus = r.lambda_minus = -0.5 * n2;
  } else {
    r.complex_pair = true;
    const double im = 0.5 * std::sqrt(-disc);
    r.lambda_plus = {-0.5 * n2, im};
    r.lambda_minus = {-0.5 * n2, -im};
  }
  r.asymptotic = -kappa - kappa * kappa / n2;
  r.asymptotic_printed = -kappa - 2.0 * kappa * kappa / n2;
  return r;
}

LinearDecayReport verify_linear_decay(int n, double kappa, double dt, double t_end, Scheme scheme, int samples) {
  if (samples < 3) throw PreconditionError("decay fit needs at least three samples");
  LinearDecayReport rep;
  rep.n = n;
  rep.kappa = kappa;
  rep.roots = dispersion_roots(n, kappa);
  rep.reference_rate = rep.roots.lambda_plus.real();
  rep.degenerate = rep.roots.double_root;

  SolverConfig cfg;
  cfg.dim = 1;
  cfg.N = n;
  cfg.dt = dt;
  cfg.t_end = t_end;
  cfg.scheme = scheme;
  cfg.epsilon = 1.0;
  cfg.model = make_model("quadratic", {{"dim", 1.0}, {"mu", kappa}});
  cfg.model_id = "quadratic";
  const long steps = cfg.step_count();
  cfg.record_every = static_cast<int>(std::max<long>(1, steps / samples));

  const Complex y0 = 0.5;
  const Complex v0 = rep.degenerate ? Complex{} : rep.roots.lambda_plus * y0;
  KVState s = KVState::zero(1, n, Matrix::identity(1));
  const auto& modes = s.y.modes();
  const std::size_t kp = modes.index({n, 0, 0}), km = modes.index({-n, 0, 0});
  s.y(0, kp) = y0;
  s.y(0, km) = std::conj(y0);
  s.v(0, kp) = v0;
  s.v(0, km) = std::conj(v0);

  std::vector<double> ts, amp;
  run(cfg, std::move(s), [&](const KVState& st, Integrator&) {
    ts.push_back(st.t);
    amp.push_back(std::abs(st.v(0, kp)));
  });

  // Exact envelope of |v_n| for the chosen data.
  const Complex lam = rep.roots.lambda_plus;
  const auto exact = [&](double t) {
    if (rep.degenerate) return std::abs(y0) * std::norm(lam) * t * std::exp(lam.real() * t);
    return std::abs(lam * y0) * std::exp(lam.real() * t);
  };

  std::vector<double> xs, ls;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double ref = exact(ts[i]);
    if (ref > 0) rep.envelope_error = std::max(rep.envelope_error, std::abs(amp[i] - ref) / ref);
    if (rep.degenerate && ts[i] <= 0) continue;  // t e^{lambda t} vanishes at the start
    if (!(amp[i] > 0)) continue;
    xs.push_back(ts[i]);
    ls.push_back(std::log(amp[i]) - (rep.degenerate ? std::log(ts[i]) : 0.0));
  }
  if (xs.size() < 3) throw EvaluationError("decay fit has fewer than three positive samples");

  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ls[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ls[i];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / m;
  for (std::size_t i = 0; i < xs.size(); ++i)
    rep.fit_residual = std::max(rep.fit_residual, std::abs(ls[i] - (icpt + slope * xs[i])));
  rep.measured_rate = slope;
  rep.rel_error = std::abs(slope - rep.reference_rate) / std::abs(rep.reference_rate);
  rep.fit_accepted = rep.fit_residual <= 1e-6;
  return rep;
}

// ---------------------------------------------------------------------------

void write_oracle_csv(std::ostream& out, const std::vector<OracleCheck>& checks) {
  out << "id,value,tolerance,pass\n";
  for (const auto& c : checks) out << fmt::format("{},{:.16e},{:.16e},{}\n", c.id, c.value, c.tolerance, c.pass ? 1 : 0);
}

void write_oracle_csv(const std::filesystem::path& path, const std::vector<OracleCheck>& checks) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  write_oracle_csv(f, checks);
  if (!f) throw IoError(fmt::format("write to {} failed", path.string()));
}

void write_oracle_summary(std::ostream& out, const std::vector<OracleCheck>& checks) {
  for (const auto& c : checks)
    out << fmt::format("{} {:.6e} {:.1e} {}\n", c.id, c.value, c.tolerance, c.pass ? "PASS" : "FAIL");
}

}  // namespace kvsim

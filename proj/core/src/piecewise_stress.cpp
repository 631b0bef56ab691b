#include "kvsim/piecewise_stress.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "kvsim/errors.hpp"

namespace kvsim {

double Polynomial::operator()(double s) const noexcept {
  double acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (c_.size() <= 1) return Polynomial({0.0});
  std::vector<double> d(c_.size() - 1);
  for (std::size_t j = 1; j < c_.size(); ++j) d[j - 1] = static_cast<double>(j) * c_[j];
  return Polynomial(std::move(d));
}

Polynomial Polynomial::antiderivative() const {
  std::vector<double> r(c_.size() + 1, 0.0);
  for (std::size_t j = 0; j < c_.size(); ++j) r[j + 1] = c_[j] / static_cast<double>(j + 1);
  return Polynomial(std::move(r));
}

Polynomial Polynomial::shifted(double x0) const {
  // Taylor shift by repeated synthetic division.
  std::vector<double> r = c_;
  const std::size_t n = r.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = n - 1; j > i; --j) r[j - 1] += x0 * r[j];
  return Polynomial(std::move(r));
}

Polynomial Polynomial::scaled(double scale) const {
  std::vector<double> r = c_;
  double f = 1.0;
  for (double& c : r) {
    c *= f;
    f *= scale;
  }
  return Polynomial(std::move(r));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

PiecewiseStress1D PiecewiseStress1D::build(double a, double b, const std::vector<double>& sigma_right_global,
                                           double theta) {
  if (!(a > 0.0)) throw PreconditionError(fmt::format("stress construction needs a > 0 (got a = {})", a));
  if (!(2.0 * a < b))
    throw PreconditionError(
        fmt::format("stress construction needs 0 < a < 2a < b < 2b (got a = {}, b = {})", a, b));
  if (!(theta > 0.0 && theta < 1.0))
    throw PreconditionError(fmt::format("volume fraction theta must lie in (0,1) (got {})", theta));
  if (sigma_right_global.empty()) throw PreconditionError("sigma_right needs at least one coefficient");

  const Polynomial global(sigma_right_global);
  const Polynomial right = global.shifted(b);  // in s = u - b
  const Polynomial right_slope = right.derivative();
  constexpr int kChecks = 4096;
  for (int i = 0; i <= kChecks; ++i) {
    const double s = b * static_cast<double>(i) / kChecks;
    if (!(right_slope(s) > 0.0))
      throw PreconditionError(fmt::format("sigma_right is not strictly increasing on [b, 2b] (slope {} at u = {})",
                                          right_slope(s), b + s));
  }

  // a-branch: sigma(a + s) = (b - a) + right(s b / a).
  Polynomial left = right.scaled(b / a);
  {
    auto c = left.coefficients();
    c[0] += b - a;
    left = Polynomial(std::move(c));
  }
  const Polynomial left_slope = left.derivative();

  // Hermite join on [2a, b].
  const double h = b - 2.0 * a;
  const double p0 = left(a);
  const double m0 = left_slope(a);
  const double p1 = right(0.0);
  const double m1 = right_slope(0.0);
  const double secant = (p1 - p0) / h;
  const Polynomial join({p0, m0, (3.0 * secant - 2.0 * m0 - m1) / h, (m0 + m1 - 2.0 * secant) / (h * h)});

  const Polynomial below({left(0.0), left_slope(0.0)});
  const Polynomial above({right(b), right_slope(b)});

  std::vector<Segment> segs{
      {-kInf, a, a, below},
      {a, 2.0 * a, a, left},
      {2.0 * a, b, 2.0 * a, join},
      {b, 2.0 * b, b, right},
      {2.0 * b, kInf, 2.0 * b, above},
  };
  return from_segments(a, b, theta, std::move(segs));
}

PiecewiseStress1D PiecewiseStress1D::from_segments(double a, double b, double theta, std::vector<Segment> segments) {
  if (segments.size() != 5) throw PreconditionError("piecewise stress needs exactly five segments");
  const double expected[6] = {-kInf, a, 2 * a, b, 2 * b, kInf};
  for (std::size_t i = 0; i < 5; ++i) {
    if (segments[i].lo != expected[i] || segments[i].hi != expected[i + 1])
      throw PreconditionError(fmt::format("segment {} has bounds [{}, {}], expected [{}, {}]", i, segments[i].lo,
                                          segments[i].hi, expected[i], expected[i + 1]));
  }
  PiecewiseStress1D out;
  out.a_ = a;
  out.b_ = b;
  out.theta_ = theta;
  out.segments_ = std::move(segments);
  out.rebuild_caches();
  return out;
}

void PiecewiseStress1D::rebuild_caches() {
  slope_.clear();
  primitive_.clear();
  for (const auto& s : segments_) {
    slope_.push_back(s.poly.derivative());
    primitive_.push_back(s.poly.antiderivative());
  }
  const auto& prim = primitive_;
  // energy_offset_[i] = W(origin_i) with W(0) = 0.
  energy_offset_.assign(segments_.size(), 0.0);

  // Integral of sigma over a finite interval [x0, x1], walking segments.
  auto integral = [&](double x0, double x1) {
    double sign = 1.0;
    if (x1 < x0) {
      std::swap(x0, x1);
      sign = -1.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const double lo = std::max(x0, segments_[i].lo);
      const double hi = std::min(x1, segments_[i].hi);
      if (hi <= lo) continue;
      total += prim[i](hi - segments_[i].origin) - prim[i](lo - segments_[i].origin);
    }
    return sign * total;
  };
  for (std::size_t i = 0; i < segments_.size(); ++i) energy_offset_[i] = integral(0.0, segments_[i].origin);
}

std::size_t PiecewiseStress1D::segment_index(double u) const noexcept {
  for (std::size_t i = 0; i + 1 < segments_.size(); ++i)
    if (u < segments_[i].hi) return i;
  return segments_.size() - 1;
}

double PiecewiseStress1D::sigma(double u) const noexcept {
  const auto& s = segments_[segment_index(u)];
  return s.poly(u - s.origin);
}

double PiecewiseStress1D::sigma_prime(double u) const noexcept {
  const std::size_t i = segment_index(u);
  return slope_[i](u - segments_[i].origin);
}

double PiecewiseStress1D::energy(double u) const noexcept {
  const std::size_t i = segment_index(u);
  const auto& s = segments_[i];
  return energy_offset_[i] + primitive_[i](u - s.origin);
}

double PiecewiseStress1D::condition_residual(int points) const {
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const double t = 1.0 + static_cast<double>(i) / (points - 1);
    worst = std::max(worst, std::abs((a_ + sigma(t * a_)) - (b_ + sigma(t * b_))));
  }
  return worst;
}

double PiecewiseStress1D::continuity_defect() const {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
    const auto& l = segments_[i];
    const auto& r = segments_[i + 1];
    const double x = l.hi;
    worst = std::max(worst, std::abs(l.poly(x - l.origin) - r.poly(x - r.origin)));
    worst = std::max(worst, std::abs(l.poly.derivative()(x - l.origin) - r.poly.derivative()(x - r.origin)));
  }
  return worst;
}

bool PiecewiseStress1D::increasing_on_branches(int samples) const {
  for (const std::size_t i : {std::size_t{1}, std::size_t{3}}) {
    const auto& s = segments_[i];
    const auto slope = s.poly.derivative();
    for (int j = 0; j <= samples; ++j) {
      const double u = s.lo + (s.hi - s.lo) * j / samples;
      if (!(slope(u - s.origin) > 0.0)) return false;
    }
  }
  return true;
}

bool PiecewiseStress1D::is_nonmonotone(int samples) const {
  const double lo = 0.5 * a_;
  const double hi = 2.5 * b_;
  double running_max = sigma(lo);
  for (int j = 1; j <= samples; ++j) {
    const double v = sigma(lo + (hi - lo) * j / samples);
    if (v < running_max) return true;
    running_max = std::max(running_max, v);
  }
  return false;
}

double PiecewiseStress1D::min_slope() const {
  // Each segment is at most cubic, so sigma' is at most quadratic: check endpoints and the vertex.
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : segments_) {
    const auto d = s.poly.derivative();
    const auto& c = d.coefficients();
    std::vector<double> cand;
    const double lo = std::isfinite(s.lo) ? s.lo - s.origin : 0.0;
    const double hi = std::isfinite(s.hi) ? s.hi - s.origin : 0.0;
    cand.push_back(lo);
    cand.push_back(hi);
    if (c.size() == 3 && c[2] != 0.0) {
      const double v = -c[1] / (2.0 * c[2]);
      if (v > lo && v < hi) cand.push_back(v);
    } else if (c.size() > 3) {
      for (int j = 0; j <= 1000; ++j) cand.push_back(lo + (hi - lo) * j / 1000.0);
    }
    for (double x : cand) best = std::min(best, d(x));
  }
  return best;
}

double PiecewiseStress1D::min_energy() const {
  // W' = sigma; minima sit where sigma changes sign from - to +, or at -inf/+inf when the
  // affine tails have the wrong sign (then W is unbounded below and we report -inf).
  const auto& first = segments_.front().poly.coefficients();
  const auto& last = segments_.back().poly.coefficients();
  if (first.size() > 1 && first[1] <= 0.0) return -std::numeric_limits<double>::infinity();
  if (last.size() > 1 && last[1] <= 0.0) return -std::numeric_limits<double>::infinity();
  // Bracket the bounded region: the affine tails vanish at origin - c0/c1.
  const double lo = std::min(0.0, segments_.front().origin - first[0] / first[1]) - 1.0;
  const double hi = std::max(2.0 * b_, segments_.back().origin - last[0] / last[1]) + 1.0;
  constexpr int kSamples = 200000;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= kSamples; ++j) best = std::min(best, energy(lo + (hi - lo) * j / kSamples));
  return best;
}

void PiecewiseStress1D::write(std::ostream& out) const {
  auto num = [](double x) {
    if (std::isinf(x)) return std::string(x > 0 ? "inf" : "-inf");
    return fmt::format("{:.17g}", x);
  };
  out << "# piecewise stress law: knots and per-segment coefficients in s = u - origin\n";
  out << "a " << num(a_) << '\n';
  out << "b " << num(b_) << '\n';
  out << "theta " << num(theta_) << '\n';
  out << "knots " << num(a_) << ' ' << num(2 * a_) << ' ' << num(b_) << ' ' << num(2 * b_) << '\n';
  out << "segments " << segments_.size() << '\n';
  for (const auto& s : segments_) {
    out << "segment " << num(s.lo) << ' ' << num(s.hi) << ' ' << num(s.origin) << ' '
        << s.poly.coefficients().size();
    for (double c : s.poly.coefficients()) out << ' ' << num(c);
    out << '\n';
  }
}

PiecewiseStress1D PiecewiseStress1D::read(std::istream& in) {
  auto parse = [](const std::string& tok) {
    if (tok == "inf") return kInf;
    if (tok == "-inf") return -kInf;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw IoError("piecewise stress: bad number '" + tok + "'");
    return v;
  };
  double a = 0, b = 0, theta = 0.5;
  std::vector<Segment> segs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    std::string tok;
    if (key == "a") {
      ls >> tok;
      a = parse(tok);
    } else if (key == "b") {
      ls >> tok;
      b = parse(tok);
    } else if (key == "theta") {
      ls >> tok;
      theta = parse(tok);
    } else if (key == "knots" || key == "segments") {
      continue;
    } else if (key == "segment") {
      Segment s;
      std::string lo, hi, origin;
      std::size_t n = 0;
      ls >> lo >> hi >> origin >> n;
      s.lo = parse(lo);
      s.hi = parse(hi);
      s.origin = parse(origin);
      std::vector<double> c(n);
      for (auto& x : c) {
        ls >> tok;
        x = parse(tok);
      }
      if (!ls) throw IoError("piecewise stress: truncated segment line");
      s.poly = Polynomial(std::move(c));
      segs.push_back(std::move(s));
    } else {
      throw IoError("piecewise stress: unknown record '" + key + "'");
    }
  }
  return from_segments(a, b, theta, std::move(segs));
}

}  // namespace kvsim

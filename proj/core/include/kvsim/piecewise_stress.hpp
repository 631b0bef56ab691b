#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kvsim {

/// Polynomial sum_j c[j] * s^j in a local variable s.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients) : c_(std::move(coefficients)) {}

  double operator()(double s) const noexcept;
  const std::vector<double>& coefficients() const noexcept { return c_; }
  int degree() const noexcept { return c_.empty() ? 0 : static_cast<int>(c_.size()) - 1; }

  Polynomial derivative() const;
  /// Antiderivative vanishing at s = 0.
  Polynomial antiderivative() const;
  /// Returns q with q(s) = p(s + x0).
  Polynomial shifted(double x0) const;
  /// Returns q with q(s) = p(scale * s).
  Polynomial scaled(double scale) const;

 private:
  std::vector<double> c_;
};

/// One-dimensional stress law sigma(u) satisfying
///   a + sigma(t a) = b + sigma(t b)  for all t in [1, 2].
///
/// Five segments, each a polynomial in s = u - origin:
///   (-inf, a)   affine, slope of the a-branch at a
///   [a, 2a]     sigma(u) = (b - a) + sigma_right(u b / a)
///   [2a, b]     C^1 cubic Hermite join
///   [b, 2b]     sigma_right
///   (2b, inf)   affine, slope of sigma_right at 2b
class PiecewiseStress1D {
 public:
  struct Segment {
    double lo;      // -inf for the first segment
    double hi;      // +inf for the last segment
    double origin;  // local variable is s = u - origin
    Polynomial poly;
  };

  /// Builds the law from the branch on [b, 2b]. `sigma_right_global` holds
  /// monomial coefficients in u. Throws PreconditionError unless
  /// 0 < a, 2a < b and sigma_right is strictly increasing on [b, 2b].
  static PiecewiseStress1D build(double a, double b, const std::vector<double>& sigma_right_global,
                                 double theta = 0.5);

  /// Reassembles from serialized parts; validates the segment layout.
  static PiecewiseStress1D from_segments(double a, double b, double theta, std::vector<Segment> segments);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double theta() const noexcept { return theta_; }
  std::vector<double> knots() const { return {a_, 2 * a_, b_, 2 * b_}; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }

  double sigma(double u) const noexcept;
  double sigma_prime(double u) const noexcept;
  /// W(u) = integral_0^u sigma.
  double energy(double u) const noexcept;

  /// S(t) = a + sigma(t a), the common value on [1, 2].
  double common_value(double t) const noexcept { return a_ + sigma(t * a_); }

  /// max over an equispaced grid of t in [1, 2] of |(a + sigma(ta)) - (b + sigma(tb))|.
  double condition_residual(int points) const;
  /// max jump of sigma and sigma' across the interior knots.
  double continuity_defect() const;
  bool increasing_on_branches(int samples = 2001) const;
  /// True if some u1 < u2 has sigma(u1) > sigma(u2).
  bool is_nonmonotone(int samples = 4001) const;
  /// inf sigma' over the real line (attained on a bounded segment).
  double min_slope() const;
  /// inf W over the real line.
  double min_energy() const;

  void write(std::ostream& out) const;
  static PiecewiseStress1D read(std::istream& in);

 private:
  std::size_t segment_index(double u) const noexcept;

  double a_ = 1.0;
  double b_ = 3.0;
  double theta_ = 0.5;
  std::vector<Segment> segments_;
  std::vector<double> energy_offset_;  // W at each segment origin
  std::vector<Polynomial> slope_;
  std::vector<Polynomial> primitive_;
  void rebuild_caches();
};

}  // namespace kvsim

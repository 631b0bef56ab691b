#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kvsim/stored_energy.hpp"
#include "kvsim/tensor.hpp"

namespace kvsim {

using Complex = std::complex<double>;
using Wavevector = std::array<int, kMaxDim>;

enum class FieldShape : std::uint32_t { Scalar = 0, Vector = 1, Matrix = 2 };

/// Number of real components of a field of the given shape: 1, d or d*d.
int component_count(FieldShape shape, int dim);

/// Truncated set of wavevectors k in Z^d with |k_i| <= N, enumerated
/// lexicographically with the first axis slowest. The mode of -k sits at
/// index count() - 1 - index(k), and k = 0 sits in the middle.
class ModeSet {
 public:
  ModeSet() : ModeSet(1, 0) {}
  ModeSet(int dim, int N);

  int dim() const noexcept { return dim_; }
  int N() const noexcept { return N_; }
  int per_axis() const noexcept { return 2 * N_ + 1; }
  std::size_t count() const noexcept { return count_; }
  std::size_t zero_index() const noexcept { return count_ / 2; }
  std::size_t conjugate_index(std::size_t mode) const noexcept { return count_ - 1 - mode; }

  const Wavevector& wavevector(std::size_t mode) const noexcept { return (*k_)[mode]; }
  std::size_t index(const Wavevector& k) const noexcept;
  bool contains(const Wavevector& k) const noexcept;
  /// |k|^2 as an exact integer.
  long squared_norm(std::size_t mode) const noexcept { return (*k2_)[mode]; }

  friend bool operator==(const ModeSet& a, const ModeSet& b) noexcept { return a.dim_ == b.dim_ && a.N_ == b.N_; }

 private:
  int dim_ = 1;
  int N_ = 0;
  std::size_t count_ = 1;
  std::shared_ptr<const std::vector<long>> k2_;
  std::shared_ptr<const std::vector<Wavevector>> k_;
};

/// Physical grid of M points per axis on the 2*pi-periodic torus together
/// with the retained mode set.
class Grid {
 public:
  Grid(int dim, int N, int M);

  /// Grid for a stress that is a polynomial of degree q in F (M >= (q+1)N + 1),
  /// or M >= 3N + 2 when the stress is not polynomial. The size is rounded up
  /// to an even number of the form 2^a 3^b.
  static Grid for_degree(int dim, int N, std::optional<int> stress_degree);
  static int fft_friendly_size(int at_least);

  int dim() const noexcept { return dim_; }
  int N() const noexcept { return modes_.N(); }
  int M() const noexcept { return M_; }
  const ModeSet& modes() const noexcept { return modes_; }
  std::size_t point_count() const noexcept { return points_; }
  /// |T^d| = (2 pi)^d.
  double volume() const noexcept;
  /// Quadrature weight (2 pi / M)^d.
  double cell_volume() const noexcept;
  /// Coordinates of a flattened physical point index.
  std::array<double, kMaxDim> point(std::size_t index) const noexcept;

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.dim_ == b.dim_ && a.M_ == b.M_ && a.modes_ == b.modes_;
  }

 private:
  int dim_;
  int M_;
  std::size_t points_;
  ModeSet modes_;
};

/// Real periodic field held as Fourier coefficients on a ModeSet.
/// Coefficients are component-major: all modes of component 0, then component 1, ...
/// Matrix components are row-major, component i*d + a holds F_{ia}.
class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(int dim, int N, FieldShape shape);
  SpectralField(const ModeSet& modes, FieldShape shape) : SpectralField(modes.dim(), modes.N(), shape) {}

  int dim() const noexcept { return modes_.dim(); }
  int N() const noexcept { return modes_.N(); }
  FieldShape shape() const noexcept { return shape_; }
  const ModeSet& modes() const noexcept { return modes_; }
  int components() const noexcept { return components_; }
  std::size_t mode_count() const noexcept { return modes_.count(); }

  Complex& operator()(int component, std::size_t mode) noexcept {
    return c_[static_cast<std::size_t>(component) * modes_.count() + mode];
  }
  const Complex& operator()(int component, std::size_t mode) const noexcept {
    return c_[static_cast<std::size_t>(component) * modes_.count() + mode];
  }
  std::span<Complex> component(int c) noexcept {
    return {c_.data() + static_cast<std::size_t>(c) * modes_.count(), modes_.count()};
  }
  std::span<const Complex> component(int c) const noexcept {
    return {c_.data() + static_cast<std::size_t>(c) * modes_.count(), modes_.count()};
  }
  std::span<Complex> coefficients() noexcept { return c_; }
  std::span<const Complex> coefficients() const noexcept { return c_; }

  /// Mean value of each component (the k = 0 coefficients).
  Complex mean(int component) const noexcept { return (*this)(component, modes_.zero_index()); }

  void set_zero() noexcept;
  /// Makes coeff(-k) the conjugate of coeff(k) and the mean real.
  void enforce_hermitian() noexcept;
  /// max |coeff(-k) - conj coeff(k)|.
  double hermitian_defect() const noexcept;
  bool same_layout(const SpectralField& o) const noexcept {
    return modes_ == o.modes_ && shape_ == o.shape_;
  }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s) noexcept;
  /// this += s * o
  SpectralField& axpy(double s, const SpectralField& o);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  friend bool operator==(const SpectralField& a, const SpectralField& b) noexcept {
    return a.same_layout(b) && a.c_ == b.c_;
  }

 private:
  ModeSet modes_;
  FieldShape shape_ = FieldShape::Scalar;
  int components_ = 1;
  std::vector<Complex> c_;
};

/// Samples of a field on the physical grid, component-major.
struct PhysicalField {
  FieldShape shape = FieldShape::Scalar;
  int components = 1;
  std::size_t points = 0;
  std::vector<double> values;

  PhysicalField() = default;
  PhysicalField(const Grid& grid, FieldShape shape);
  std::span<double> component(int c) noexcept { return {values.data() + static_cast<std::size_t>(c) * points, points}; }
  std::span<const double> component(int c) const noexcept {
    return {values.data() + static_cast<std::size_t>(c) * points, points};
  }
};

// Spectral calculus. All operators act coefficient-wise.

/// Scalar -> vector (d_a f), vector -> matrix (component (i,a) = d_a f_i).
SpectralField gradient(const SpectralField& f);
/// Vector -> scalar, matrix -> vector ((div F)_i = sum_a d_a F_{ia}).
SpectralField divergence(const SpectralField& f);
SpectralField laplacian(const SpectralField& f);
/// d = 2 only: vector -> scalar d_1 f_2 - d_2 f_1; matrix -> vector of row curls.
SpectralField curl(const SpectralField& f);
/// Truncates or zero-pads to another mode budget (P^N when shrinking).
SpectralField resample(const SpectralField& f, int N);

/// L2 norm by Parseval, ||f||^2 = |T| sum |c_k|^2 over all components.
double l2_norm(const SpectralField& f);
/// H^s norm, ||f||^2 = |T| sum (1 + |k|^2)^s |c_k|^2.
double hs_norm(const SpectralField& f, double s);
double h1_norm(const SpectralField& f);
/// |T| sum |k|^2 |c_k|^2 = integral of |grad f|^2.
double h1_seminorm_squared(const SpectralField& f);

/// Real-to-complex transforms between a Grid and its ModeSet, backed by FFTW.
///
/// Plans are created under a global lock; an instance owns its scratch
/// buffers and must not be used concurrently from several threads.
class FourierTransform {
 public:
  explicit FourierTransform(const Grid& grid);
  ~FourierTransform();
  FourierTransform(const FourierTransform&) = delete;
  FourierTransform& operator=(const FourierTransform&) = delete;
  FourierTransform(FourierTransform&&) noexcept;
  FourierTransform& operator=(FourierTransform&&) noexcept;

  const Grid& grid() const noexcept;

  /// One component: M^d samples -> retained modes, normalized by 1/M^d, Hermitian symmetry enforced.
  void forward(std::span<const double> samples, std::span<Complex> modes);
  /// One component: retained modes -> M^d samples (trigonometric interpolant).
  void inverse(std::span<const Complex> modes, std::span<double> samples);

  SpectralField forward(const PhysicalField& f);
  PhysicalField inverse(const SpectralField& f);
  void inverse(const SpectralField& f, PhysicalField& out);

  /// P^N S(F): S evaluated on the grid samples of F and transformed back.
  /// Throws BlowUpError carrying `time` if a stress value is not finite.
  /// When `energy` is given it receives the grid quadrature of W(F).
  SpectralField nonlinear_stress(const StoredEnergyModel& model, const SpectralField& F, double time = 0.0,
                                 double* energy = nullptr);

  /// Lp norm by grid quadrature of the pointwise Euclidean norm.
  double lp_norm(const SpectralField& f, double p);
  /// Grid quadrature of a scalar sample set.
  double integrate(std::span<const double> samples) const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kvsim

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>

#include "kvsim/errors.hpp"

namespace kvsim {

inline constexpr int kMaxDim = 3;

/// Dense d x d matrix (d <= 3), row-major. Entry (i, a) is F_{i a}.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw ShapeError("matrix dimension must be 1, 2 or 3");
  }

  static Matrix identity(int dim, double scale = 1.0) {
    Matrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = scale;
    return m;
  }

  static Matrix from_flat(int dim, std::span<const double> values) {
    Matrix m(dim);
    if (values.size() != static_cast<std::size_t>(dim * dim)) throw ShapeError("matrix entry count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) m.e_[i] = values[i];
    return m;
  }

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(dim_ * dim_); }

  double& operator()(int i, int a) noexcept { return e_[static_cast<std::size_t>(i * dim_ + a)]; }
  double operator()(int i, int a) const noexcept { return e_[static_cast<std::size_t>(i * dim_ + a)]; }

  std::span<double> flat() noexcept { return {e_.data(), size()}; }
  std::span<const double> flat() const noexcept { return {e_.data(), size()}; }

  double norm_squared() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += e_[i] * e_[i];
    return s;
  }
  double norm() const noexcept { return std::sqrt(norm_squared()); }

  Matrix& operator+=(const Matrix& o) noexcept {
    for (std::size_t i = 0; i < size(); ++i) e_[i] += o.e_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) noexcept {
    for (std::size_t i = 0; i < size(); ++i) e_[i] -= o.e_[i];
    return *this;
  }
  Matrix& operator*=(double s) noexcept {
    for (std::size_t i = 0; i < size(); ++i) e_[i] *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) noexcept { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) noexcept { return a -= b; }
  friend Matrix operator*(double s, Matrix a) noexcept { return a *= s; }
  friend bool operator==(const Matrix& a, const Matrix& b) noexcept {
    if (a.dim_ != b.dim_) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.e_[i] != b.e_[i]) return false;
    return true;
  }

 private:
  int dim_ = 1;
  std::array<double, kMaxDim * kMaxDim> e_{};
};

/// Frobenius inner product (F, G) = tr F G^T.
inline double inner(const Matrix& a, const Matrix& b) noexcept {
  double s = 0.0;
  auto fa = a.flat();
  auto fb = b.flat();
  for (std::size_t i = 0; i < fa.size(); ++i) s += fa[i] * fb[i];
  return s;
}

/// Fourth-order tensor acting on d x d matrices, stored as a dense d^2 x d^2
/// matrix over row-major flattened matrix indices: H(i*d+a, j*d+b) = d^2 W / dF_ia dF_jb.
class Hessian {
 public:
  Hessian() = default;
  explicit Hessian(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim) throw ShapeError("hessian dimension must be 1, 2 or 3");
  }

  int dim() const noexcept { return dim_; }
  int rows() const noexcept { return dim_ * dim_; }

  double& operator()(int p, int q) noexcept { return e_[static_cast<std::size_t>(p * rows() + q)]; }
  double operator()(int p, int q) const noexcept { return e_[static_cast<std::size_t>(p * rows() + q)]; }

  std::span<double> flat() noexcept { return {e_.data(), static_cast<std::size_t>(rows() * rows())}; }
  std::span<const double> flat() const noexcept {
    return {e_.data(), static_cast<std::size_t>(rows() * rows())};
  }

  /// Quadratic form H : (A, B) = sum_pq A_p H_pq B_q.
  double contract(std::span<const double> a, std::span<const double> b) const noexcept {
    const int n = rows();
    double s = 0.0;
    for (int p = 0; p < n; ++p) {
      double row = 0.0;
      for (int q = 0; q < n; ++q) row += (*this)(p, q) * b[static_cast<std::size_t>(q)];
      s += a[static_cast<std::size_t>(p)] * row;
    }
    return s;
  }

 private:
  int dim_ = 1;
  std::array<double, kMaxDim * kMaxDim * kMaxDim * kMaxDim> e_{};
};

}  // namespace kvsim

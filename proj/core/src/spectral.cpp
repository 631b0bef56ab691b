#include "kvsim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>
#include <fmt/format.h>

#include "kvsim/errors.hpp"

namespace kvsim {

int component_count(FieldShape shape, int dim) {
  switch (shape) {
    case FieldShape::Scalar: return 1;
    case FieldShape::Vector: return dim;
    case FieldShape::Matrix: return dim * dim;
  }
  throw ShapeError("unknown field shape");
}

// ---------------------------------------------------------------------------

ModeSet::ModeSet(int dim, int N) : dim_(dim), N_(N) {
  if (dim < 1 || dim > kMaxDim) throw ShapeError(fmt::format("dimension must be 1..3 (got {})", dim));
  if (N < 0) throw ShapeError(fmt::format("mode budget N must be >= 0 (got {})", N));
  count_ = 1;
  for (int a = 0; a < dim; ++a) count_ *= static_cast<std::size_t>(2 * N + 1);
  auto norms = std::make_shared<std::vector<long>>(count_);
  auto vectors = std::make_shared<std::vector<Wavevector>>(count_);
  const auto per = static_cast<std::size_t>(per_axis());
  for (std::size_t m = 0; m < count_; ++m) {
    Wavevector k{0, 0, 0};
    std::size_t rest = m;
    for (int a = dim - 1; a >= 0; --a) {
      k[static_cast<std::size_t>(a)] = static_cast<int>(rest % per) - N;
      rest /= per;
    }
    long s = 0;
    for (int a = 0; a < dim; ++a) s += static_cast<long>(k[static_cast<std::size_t>(a)]) * k[static_cast<std::size_t>(a)];
    (*norms)[m] = s;
    (*vectors)[m] = k;
  }
  k2_ = std::move(norms);
  k_ = std::move(vectors);
}

std::size_t ModeSet::index(const Wavevector& k) const noexcept {
  std::size_t m = 0;
  const auto per = static_cast<std::size_t>(per_axis());
  for (int a = 0; a < dim_; ++a) m = m * per + static_cast<std::size_t>(k[static_cast<std::size_t>(a)] + N_);
  return m;
}

bool ModeSet::contains(const Wavevector& k) const noexcept {
  for (int a = 0; a < dim_; ++a)
    if (std::abs(k[static_cast<std::size_t>(a)]) > N_) return false;
  return true;
}

// ---------------------------------------------------------------------------

Grid::Grid(int dim, int N, int M) : dim_(dim), M_(M), points_(1), modes_(dim, N) {
  if (M < 2 * N + 1) throw ShapeError(fmt::format("grid needs M >= 2N+1 points per axis (N = {}, M = {})", N, M));
  for (int a = 0; a < dim; ++a) points_ *= static_cast<std::size_t>(M);
}

int Grid::fft_friendly_size(int at_least) {
  for (int m = std::max(2, at_least);; ++m) {
    if (m % 2) continue;
    int r = m;
    while (r % 2 == 0) r /= 2;
    while (r % 3 == 0) r /= 3;
    if (r == 1) return m;
  }
}

Grid Grid::for_degree(int dim, int N, std::optional<int> stress_degree) {
  const int required = stress_degree ? (std::max(*stress_degree, 1) + 1) * N + 1 : 3 * N + 2;
  return Grid(dim, N, fft_friendly_size(std::max(required, 2 * N + 2)));
}

double Grid::volume() const noexcept { return std::pow(2.0 * std::numbers::pi, dim_); }

double Grid::cell_volume() const noexcept { return std::pow(2.0 * std::numbers::pi / M_, dim_); }

std::array<double, kMaxDim> Grid::point(std::size_t index) const noexcept {
  std::array<double, kMaxDim> x{0.0, 0.0, 0.0};
  const double h = 2.0 * std::numbers::pi / M_;
  for (int a = dim_ - 1; a >= 0; --a) {
    x[static_cast<std::size_t>(a)] = h * static_cast<double>(index % static_cast<std::size_t>(M_));
    index /= static_cast<std::size_t>(M_);
  }
  return x;
}

// ---------------------------------------------------------------------------

SpectralField::SpectralField(int dim, int N, FieldShape shape)
    : modes_(dim, N), shape_(shape), components_(component_count(shape, dim)),
      c_(static_cast<std::size_t>(components_) * modes_.count()) {}

void SpectralField::set_zero() noexcept { std::fill(c_.begin(), c_.end(), Complex{}); }

void SpectralField::enforce_hermitian() noexcept {
  const std::size_t n = modes_.count();
  for (int c = 0; c < components_; ++c) {
    auto f = component(c);
    for (std::size_t m = 0; m < n / 2; ++m) f[m] = std::conj(f[n - 1 - m]);
    f[n / 2] = Complex(f[n / 2].real(), 0.0);
  }
}

double SpectralField::hermitian_defect() const noexcept {
  const std::size_t n = modes_.count();
  double worst = 0.0;
  for (int c = 0; c < components_; ++c) {
    auto f = component(c);
    for (std::size_t m = 0; m < n; ++m) worst = std::max(worst, std::abs(f[n - 1 - m] - std::conj(f[m])));
  }
  return worst;
}

namespace {

void require_same_layout(const SpectralField& a, const SpectralField& b) {
  if (!a.same_layout(b)) throw ShapeError("spectral fields differ in dimension, mode budget or shape");
}

}  // namespace

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  require_same_layout(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  require_same_layout(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) noexcept {
  for (auto& x : c_) x *= s;
  return *this;
}

SpectralField& SpectralField::axpy(double s, const SpectralField& o) {
  require_same_layout(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += s * o.c_[i];
  return *this;
}

PhysicalField::PhysicalField(const Grid& grid, FieldShape s)
    : shape(s), components(component_count(s, grid.dim())), points(grid.point_count()),
      values(static_cast<std::size_t>(components) * points) {}

// ---------------------------------------------------------------------------
// Spectral calculus

namespace {

// i * k * c
inline Complex times_ik(double k, Complex c) noexcept { return {-k * c.imag(), k * c.real()}; }

}  // namespace

SpectralField gradient(const SpectralField& f) {
  const int d = f.dim();
  const auto& modes = f.modes();
  if (f.shape() == FieldShape::Matrix) throw ShapeError("gradient of a matrix field is not supported");
  const FieldShape out_shape = f.shape() == FieldShape::Scalar ? FieldShape::Vector : FieldShape::Matrix;
  SpectralField g(modes, out_shape);
  for (int i = 0; i < f.components(); ++i) {
    auto src = f.component(i);
    for (int a = 0; a < d; ++a) {
      auto dst = g.component(i * d + a);
      for (std::size_t m = 0; m < modes.count(); ++m)
        dst[m] = times_ik(modes.wavevector(m)[static_cast<std::size_t>(a)], src[m]);
    }
  }
  return g;
}

SpectralField divergence(const SpectralField& f) {
  const int d = f.dim();
  const auto& modes = f.modes();
  if (f.shape() == FieldShape::Scalar) throw ShapeError("divergence of a scalar field is not defined");
  const FieldShape out_shape = f.shape() == FieldShape::Vector ? FieldShape::Scalar : FieldShape::Vector;
  SpectralField g(modes, out_shape);
  const int rows = f.shape() == FieldShape::Vector ? 1 : d;
  for (int i = 0; i < rows; ++i) {
    auto dst = g.component(i);
    for (std::size_t m = 0; m < modes.count(); ++m) {
      const Wavevector k = modes.wavevector(m);
      Complex s{};
      for (int a = 0; a < d; ++a) s += times_ik(k[static_cast<std::size_t>(a)], f(i * d + a, m));
      dst[m] = s;
    }
  }
  return g;
}

SpectralField laplacian(const SpectralField& f) {
  SpectralField g = f;
  const auto& modes = f.modes();
  for (int c = 0; c < f.components(); ++c) {
    auto dst = g.component(c);
    for (std::size_t m = 0; m < modes.count(); ++m) dst[m] *= -static_cast<double>(modes.squared_norm(m));
  }
  return g;
}

SpectralField curl(const SpectralField& f) {
  if (f.dim() != 2) throw ShapeError("curl is implemented for d = 2");
  const auto& modes = f.modes();
  if (f.shape() == FieldShape::Scalar) throw ShapeError("curl of a scalar field is not defined");
  const bool matrix = f.shape() == FieldShape::Matrix;
  SpectralField g(modes, matrix ? FieldShape::Vector : FieldShape::Scalar);
  const int rows = matrix ? 2 : 1;
  for (int i = 0; i < rows; ++i) {
    const int c0 = matrix ? 2 * i : 0;
    auto dst = g.component(i);
    for (std::size_t m = 0; m < modes.count(); ++m) {
      const Wavevector k = modes.wavevector(m);
      dst[m] = times_ik(k[0], f(c0 + 1, m)) - times_ik(k[1], f(c0, m));
    }
  }
  return g;
}

SpectralField resample(const SpectralField& f, int N) {
  SpectralField g(f.dim(), N, f.shape());
  const auto& from = f.modes();
  const auto& to = g.modes();
  for (std::size_t m = 0; m < to.count(); ++m) {
    const Wavevector k = to.wavevector(m);
    if (!from.contains(k)) continue;
    const std::size_t src = from.index(k);
    for (int c = 0; c < f.components(); ++c) g(c, m) = f(c, src);
  }
  return g;
}

double hs_norm(const SpectralField& f, double s) {
  const auto& modes = f.modes();
  std::vector<double> weight(modes.count());
  for (std::size_t m = 0; m < modes.count(); ++m) weight[m] = std::pow(1.0 + static_cast<double>(modes.squared_norm(m)), s);
  double sum = 0.0;
  for (int c = 0; c < f.components(); ++c) {
    auto src = f.component(c);
    for (std::size_t m = 0; m < modes.count(); ++m) sum += weight[m] * std::norm(src[m]);
  }
  return std::sqrt(std::pow(2.0 * std::numbers::pi, f.dim()) * sum);
}

double l2_norm(const SpectralField& f) {
  double sum = 0.0;
  for (const Complex& c : f.coefficients()) sum += std::norm(c);
  return std::sqrt(std::pow(2.0 * std::numbers::pi, f.dim()) * sum);
}

double h1_norm(const SpectralField& f) { return hs_norm(f, 1.0); }

double h1_seminorm_squared(const SpectralField& f) {
  const auto& modes = f.modes();
  double sum = 0.0;
  for (int c = 0; c < f.components(); ++c) {
    auto src = f.component(c);
    for (std::size_t m = 0; m < modes.count(); ++m) sum += static_cast<double>(modes.squared_norm(m)) * std::norm(src[m]);
  }
  return std::pow(2.0 * std::numbers::pi, f.dim()) * sum;
}

// ---------------------------------------------------------------------------
// FFTW-backed transform

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct FourierTransform::Impl {
  Grid grid;
  std::size_t real_size;
  std::size_t complex_size;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  // Per retained mode: offset into the half-spectrum and whether the value is the conjugate of -k.
  std::vector<std::size_t> offset;
  std::vector<unsigned char> conjugated;
  PhysicalField F_samples;
  PhysicalField S_samples;

  explicit Impl(const Grid& g) : grid(g) {
    const int d = grid.dim();
    const int M = grid.M();
    const int half = M / 2 + 1;
    real_size = grid.point_count();
    complex_size = real_size / static_cast<std::size_t>(M) * static_cast<std::size_t>(half);
    std::array<int, kMaxDim> n{M, M, M};

    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(real_size);
    spec = fftw_alloc_complex(complex_size);
    if (!real || !spec) throw Error("FFTW buffer allocation failed");
    r2c = fftw_plan_dft_r2c(d, n.data(), real, spec, FFTW_ESTIMATE);
    c2r = fftw_plan_dft_c2r(d, n.data(), spec, real, FFTW_ESTIMATE);
    if (!r2c || !c2r) throw Error("FFTW plan creation failed");

    const auto& modes = grid.modes();
    offset.resize(modes.count());
    conjugated.resize(modes.count());
    for (std::size_t m = 0; m < modes.count(); ++m) {
      Wavevector k = modes.wavevector(m);
      const bool flip = k[static_cast<std::size_t>(d - 1)] < 0;
      if (flip)
        for (int a = 0; a < d; ++a) k[static_cast<std::size_t>(a)] = -k[static_cast<std::size_t>(a)];
      std::size_t off = 0;
      for (int a = 0; a < d; ++a) {
        const int extent = a == d - 1 ? half : M;
        const int idx = ((k[static_cast<std::size_t>(a)] % M) + M) % M;
        off = off * static_cast<std::size_t>(extent) + static_cast<std::size_t>(idx);
      }
      offset[m] = off;
      conjugated[m] = flip ? 1 : 0;
    }
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
    fftw_free(real);
    fftw_free(spec);
  }

  void forward(std::span<const double> samples, std::span<Complex> out) {
    std::copy(samples.begin(), samples.end(), real);
    fftw_execute(r2c);
    const double scale = 1.0 / static_cast<double>(real_size);
    for (std::size_t m = 0; m < out.size(); ++m) {
      const fftw_complex& z = spec[offset[m]];
      out[m] = conjugated[m] ? Complex(z[0] * scale, -z[1] * scale) : Complex(z[0] * scale, z[1] * scale);
    }
    const std::size_t n = out.size();
    for (std::size_t m = 0; m < n / 2; ++m) out[m] = std::conj(out[n - 1 - m]);
    out[n / 2] = Complex(out[n / 2].real(), 0.0);
  }

  void inverse(std::span<const Complex> in, std::span<double> samples) {
    std::fill(reinterpret_cast<double*>(spec), reinterpret_cast<double*>(spec) + 2 * complex_size, 0.0);
    for (std::size_t m = 0; m < in.size(); ++m) {
      if (conjugated[m]) continue;
      spec[offset[m]][0] = in[m].real();
      spec[offset[m]][1] = in[m].imag();
    }
    fftw_execute(c2r);
    std::copy(real, real + real_size, samples.begin());
  }
};

FourierTransform::FourierTransform(const Grid& grid) : impl_(std::make_unique<Impl>(grid)) {}
FourierTransform::~FourierTransform() = default;
FourierTransform::FourierTransform(FourierTransform&&) noexcept = default;
FourierTransform& FourierTransform::operator=(FourierTransform&&) noexcept = default;

const Grid& FourierTransform::grid() const noexcept { return impl_->grid; }

void FourierTransform::forward(std::span<const double> samples, std::span<Complex> modes) {
  if (samples.size() != impl_->real_size)
    throw ShapeError(fmt::format("expected {} samples, got {}", impl_->real_size, samples.size()));
  if (modes.size() != impl_->grid.modes().count())
    throw ShapeError(fmt::format("expected {} modes, got {}", impl_->grid.modes().count(), modes.size()));
  impl_->forward(samples, modes);
}

void FourierTransform::inverse(std::span<const Complex> modes, std::span<double> samples) {
  if (samples.size() != impl_->real_size)
    throw ShapeError(fmt::format("expected {} samples, got {}", impl_->real_size, samples.size()));
  if (modes.size() != impl_->grid.modes().count())
    throw ShapeError(fmt::format("expected {} modes, got {}", impl_->grid.modes().count(), modes.size()));
  impl_->inverse(modes, samples);
}

SpectralField FourierTransform::forward(const PhysicalField& f) {
  if (f.points != impl_->real_size) throw ShapeError("physical field does not match the grid");
  SpectralField out(impl_->grid.modes(), f.shape);
  if (out.components() != f.components) throw ShapeError("physical field component count does not match its shape");
  for (int c = 0; c < f.components; ++c) impl_->forward(f.component(c), out.component(c));
  return out;
}

void FourierTransform::inverse(const SpectralField& f, PhysicalField& out) {
  if (!(f.modes() == impl_->grid.modes())) throw ShapeError("spectral field does not match the grid's mode set");
  if (out.points != impl_->real_size || out.shape != f.shape() || out.components != f.components())
    out = PhysicalField(impl_->grid, f.shape());
  for (int c = 0; c < f.components(); ++c) impl_->inverse(f.component(c), out.component(c));
}

PhysicalField FourierTransform::inverse(const SpectralField& f) {
  PhysicalField out(impl_->grid, f.shape());
  inverse(f, out);
  return out;
}

SpectralField FourierTransform::nonlinear_stress(const StoredEnergyModel& model, const SpectralField& F, double time,
                                                double* energy) {
  const int d = impl_->grid.dim();
  if (F.shape() != FieldShape::Matrix || F.dim() != d) throw ShapeError("nonlinear_stress expects a matrix field");
  if (model.dim() != d)
    throw ShapeError(fmt::format("model '{}' is {}-dimensional, field is {}-dimensional", model.id(), model.dim(), d));
  inverse(F, impl_->F_samples);
  PhysicalField& S = impl_->S_samples;
  if (S.points != impl_->real_size || S.shape != FieldShape::Matrix) S = PhysicalField(impl_->grid, FieldShape::Matrix);

  const int nc = d * d;
  const std::size_t np = impl_->real_size;
  const double* fv = impl_->F_samples.values.data();
  double* sv = S.values.data();
  std::array<double, kMaxDim * kMaxDim> Fp{};
  std::array<double, kMaxDim * kMaxDim> Sp{};
  const std::span<const double> Fspan(Fp.data(), static_cast<std::size_t>(nc));
  const std::span<double> Sspan(Sp.data(), static_cast<std::size_t>(nc));
  double sumW = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    for (int c = 0; c < nc; ++c) Fp[static_cast<std::size_t>(c)] = fv[static_cast<std::size_t>(c) * np + p];
    model.stress(Fspan, Sspan);
    if (energy) sumW += model.energy(Fspan);
    for (int c = 0; c < nc; ++c) {
      const double s = Sp[static_cast<std::size_t>(c)];
      if (!std::isfinite(s)) {
        const auto x = impl_->grid.point(p);
        throw BlowUpError(fmt::format("non-finite stress at t = {} x = ({:.6g}, {:.6g})", time, x[0], x[1]), time);
      }
      sv[static_cast<std::size_t>(c) * np + p] = s;
    }
  }
  if (energy) *energy = sumW * impl_->grid.cell_volume();
  return forward(S);
}

double FourierTransform::integrate(std::span<const double> samples) const noexcept {
  double s = 0.0;
  for (double x : samples) s += x;
  return s * impl_->grid.cell_volume();
}

double FourierTransform::lp_norm(const SpectralField& f, double p) {
  const PhysicalField phys = inverse(f);
  double acc = 0.0;
  for (std::size_t i = 0; i < phys.points; ++i) {
    double r2 = 0.0;
    for (int c = 0; c < phys.components; ++c) {
      const double x = phys.values[static_cast<std::size_t>(c) * phys.points + i];
      r2 += x * x;
    }
    const double r = std::sqrt(r2);
    if (std::isinf(p)) acc = std::max(acc, r);
    else acc += std::pow(r, p);
  }
  if (std::isinf(p)) return acc;
  return std::pow(acc * impl_->grid.cell_volume(), 1.0 / p);
}

}  // namespace kvsim

#include "kvsim/stored_energy.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "kvsim/errors.hpp"

namespace kvsim {

Matrix StoredEnergyModel::stress(const Matrix& F) const {
  Matrix S(F.dim());
  stress(F.flat(), S.flat());
  return S;
}

Hessian StoredEnergyModel::hessian(const Matrix& F) const {
  Hessian H(F.dim());
  hessian(F.flat(), H.flat());
  return H;
}

namespace {

double squared_norm(std::span<const double> F) noexcept {
  double s = 0.0;
  for (double x : F) s += x * x;
  return s;
}

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) throw PreconditionError(fmt::format("model dimension must be 1..3 (got {})", dim));
}

}  // namespace

// --- quadratic -------------------------------------------------------------

QuadraticEnergy::QuadraticEnergy(int dim, double mu) : dim_(dim), mu_(mu) { check_dim(dim); }

double QuadraticEnergy::energy(std::span<const double> F) const noexcept { return 0.5 * mu_ * squared_norm(F); }

void QuadraticEnergy::stress(std::span<const double> F, std::span<double> S) const noexcept {
  for (std::size_t i = 0; i < F.size(); ++i) S[i] = mu_ * F[i];
}

void QuadraticEnergy::hessian(std::span<const double> F, std::span<double> H) const noexcept {
  const std::size_t n = F.size();
  std::fill(H.begin(), H.begin() + static_cast<std::ptrdiff_t>(n * n), 0.0);
  for (std::size_t p = 0; p < n; ++p) H[p * n + p] = mu_;
}

// --- quartic ---------------------------------------------------------------

QuarticEnergy::QuarticEnergy(int dim, double alpha, std::string id) : dim_(dim), alpha_(alpha), id_(std::move(id)) {
  check_dim(dim);
}

double QuarticEnergy::energy(std::span<const double> F) const noexcept {
  const double r2 = squared_norm(F);
  return 0.25 * r2 * r2 - 0.5 * alpha_ * r2;
}

void QuarticEnergy::stress(std::span<const double> F, std::span<double> S) const noexcept {
  const double f = squared_norm(F) - alpha_;
  for (std::size_t i = 0; i < F.size(); ++i) S[i] = f * F[i];
}

void QuarticEnergy::hessian(std::span<const double> F, std::span<double> H) const noexcept {
  const std::size_t n = F.size();
  const double diag = squared_norm(F) - alpha_;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) H[p * n + q] = 2.0 * F[p] * F[q] + (p == q ? diag : 0.0);
}

// --- piecewise -------------------------------------------------------------

PiecewiseEnergy1D::PiecewiseEnergy1D(PiecewiseStress1D law)
    : law_(std::move(law)),
      semiconvexity_(std::max(0.0, -law_.min_slope())),
      lower_bound_(law_.min_energy()) {}

double PiecewiseEnergy1D::energy(std::span<const double> F) const noexcept { return law_.energy(F[0]); }

void PiecewiseEnergy1D::stress(std::span<const double> F, std::span<double> S) const noexcept {
  S[0] = law_.sigma(F[0]);
}

void PiecewiseEnergy1D::hessian(std::span<const double> F, std::span<double> H) const noexcept {
  H[0] = law_.sigma_prime(F[0]);
}

PiecewiseStress1D default_piecewise_law() { return PiecewiseStress1D::build(1.0, 3.0, {0.0, 1.0}, 0.5); }

// --- factory ---------------------------------------------------------------

namespace {

double param(const ParamMap& params, std::string_view key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(std::string_view id, const ParamMap& params, std::initializer_list<std::string_view> allowed,
                    bool allow_sigma_coefficients = false) {
  for (const auto& [key, value] : params) {
    const bool known = std::find(allowed.begin(), allowed.end(), key) != allowed.end() ||
                       (allow_sigma_coefficients && key.rfind("sigma_right_c", 0) == 0);
    if (!known) throw PreconditionError(fmt::format("model '{}' has no parameter '{}'", id, key));
  }
}

int integer_param(const ParamMap& params, std::string_view key, int fallback) {
  const double v = param(params, key, fallback);
  if (v != std::floor(v)) throw PreconditionError(fmt::format("parameter '{}' must be an integer", key));
  return static_cast<int>(v);
}

}  // namespace

ModelPtr make_model(std::string_view id, const ParamMap& params) {
  if (id == "quadratic") {
    reject_unknown(id, params, {"dim", "mu"});
    return std::make_shared<QuadraticEnergy>(integer_param(params, "dim", 2), param(params, "mu", 1.0));
  }
  if (id == "quartic") {
    reject_unknown(id, params, {"dim", "alpha"});
    return std::make_shared<QuarticEnergy>(integer_param(params, "dim", 2), param(params, "alpha", 1.0));
  }
  if (id == "double_well") {
    reject_unknown(id, params, {"dim"});
    if (integer_param(params, "dim", 1) != 1) throw PreconditionError("double_well is one-dimensional");
    return std::make_shared<QuarticEnergy>(1, 1.0, "double_well");
  }
  if (id == "piecewise") {
    reject_unknown(id, params, {"dim", "a", "b", "theta"}, true);
    if (integer_param(params, "dim", 1) != 1) throw PreconditionError("piecewise is one-dimensional");
    std::vector<double> coeffs;
    for (int j = 0;; ++j) {
      auto it = params.find(fmt::format("sigma_right_c{}", j));
      if (it == params.end()) break;
      coeffs.push_back(it->second);
    }
    if (coeffs.empty()) coeffs = {0.0, 1.0};
    return std::make_shared<PiecewiseEnergy1D>(PiecewiseStress1D::build(
        param(params, "a", 1.0), param(params, "b", 3.0), coeffs, param(params, "theta", 0.5)));
  }
  throw PreconditionError(fmt::format("unknown stored-energy model '{}'", id));
}

std::vector<CatalogEntry> builtin_models() {
  std::vector<CatalogEntry> out;
  auto add = [&](std::string id, ParamMap params) {
    auto model = make_model(id, params);
    out.push_back({std::move(id), std::move(params), std::move(model)});
  };
  add("quadratic", {{"dim", 2}, {"mu", 1.0}});
  add("quartic", {{"dim", 2}, {"alpha", 1.0}});
  add("double_well", {});
  add("piecewise", {});
  return out;
}

}  // namespace kvsim

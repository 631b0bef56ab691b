#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "kvsim/errors.hpp"
#include "kvsim/stored_energy.hpp"

namespace kvsim {

namespace {

std::string describe(const Matrix& F) {
  std::string s = "[";
  for (std::size_t i = 0; i < F.size(); ++i) s += fmt::format("{}{:.6g}", i ? ", " : "", F.flat()[i]);
  return s + "]";
}

void require_finite(double x, std::size_t index, const Matrix& F, std::string_view what) {
  if (!std::isfinite(x))
    throw EvaluationError(fmt::format("non-finite {} at sample {} F = {}", what, index, describe(F)));
}

void require_finite(std::span<const double> xs, std::size_t index, const Matrix& F, std::string_view what) {
  for (double x : xs) require_finite(x, index, F, what);
}

double min_eigenvalue(const Hessian& H) {
  const int n = H.rows();
  Eigen::MatrixXd m(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) m(p, q) = 0.5 * (H(p, q) + H(q, p));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace

SemiconvexityReport check_semiconvexity(const StoredEnergyModel& model, std::span<const Matrix> samples) {
  return check_semiconvexity(model, samples, model.semiconvexity());
}

SemiconvexityReport check_semiconvexity(const StoredEnergyModel& model, std::span<const Matrix> samples, double K) {
  if (samples.empty()) throw PreconditionError("semiconvexity check needs at least one sample");
  SemiconvexityReport report{std::numeric_limits<double>::infinity(), 0, false};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Matrix& F = samples[i];
    require_finite(model.energy(F), i, F, "energy");
    const Matrix S = model.stress(F);
    require_finite(S.flat(), i, F, "stress");
    Hessian H = model.hessian(F);
    require_finite(H.flat(), i, F, "hessian");
    for (int p = 0; p < H.rows(); ++p) H(p, p) += K;
    const double lam = min_eigenvalue(H);
    if (lam < report.min_eigenvalue) {
      report.min_eigenvalue = lam;
      report.argmin_sample = i;
    }
  }
  report.pass = report.min_eigenvalue >= -1e-10;
  return report;
}

MonotonicityReport check_ab_monotonicity(const StoredEnergyModel& model,
                                         std::span<const std::pair<Matrix, Matrix>> pairs,
                                         MonotonicityVariant variant) {
  double C = 0.0;
  if (variant == MonotonicityVariant::ABprime) {
    const auto c = model.abprime_constant();
    if (!c) throw PreconditionError(fmt::format("model '{}' does not claim the strengthened condition", model.id()));
    C = *c;
  }
  return check_ab_monotonicity(model, pairs, variant, C, model.semiconvexity());
}

MonotonicityReport check_ab_monotonicity(const StoredEnergyModel& model,
                                         std::span<const std::pair<Matrix, Matrix>> pairs,
                                         MonotonicityVariant variant, double C, double K) {
  MonotonicityReport report{std::numeric_limits<double>::infinity(), 0, false};
  const double p = model.growth_exponent();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [F1, F2] = pairs[i];
    const Matrix S1 = model.stress(F1);
    const Matrix S2 = model.stress(F2);
    require_finite(S1.flat(), i, F1, "stress");
    require_finite(S2.flat(), i, F2, "stress");
    const Matrix dF = F1 - F2;
    const double gap2 = dF.norm_squared();
    const double lhs = inner(S1 - S2, dF);
    const double w1 = std::pow(F1.norm(), p - 2.0);
    const double w2 = std::pow(F2.norm(), p - 2.0);
    double slack = lhs + K * gap2;
    if (variant == MonotonicityVariant::ABprime) slack -= C * (w1 + w2) * gap2;
    const double scale = std::max(1.0, gap2 * (1.0 + w1 + w2));
    const double normalized = slack / scale;
    if (normalized < report.worst_violation) {
      report.worst_violation = normalized;
      report.argmin_pair = i;
    }
  }
  if (pairs.empty()) report.worst_violation = 0.0;
  report.pass = report.worst_violation >= -1e-10;
  return report;
}

ConsistencyReport check_gradient_consistency(const StoredEnergyModel& model, std::span<const Matrix> samples,
                                             double step, double tolerance) {
  ConsistencyReport report{0.0, false};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Matrix& F = samples[i];
    const Matrix S = model.stress(F);
    require_finite(S.flat(), i, F, "stress");
    double scale = 1.0;
    for (double s : S.flat()) scale = std::max(scale, std::abs(s));
    for (std::size_t e = 0; e < F.size(); ++e) {
      Matrix plus = F, minus = F;
      plus.flat()[e] += step;
      minus.flat()[e] -= step;
      const double fd = (model.energy(plus) - model.energy(minus)) / (2.0 * step);
      report.max_relative_error = std::max(report.max_relative_error, std::abs(fd - S.flat()[e]) / scale);
    }
  }
  report.pass = report.max_relative_error < tolerance;
  return report;
}

ConsistencyReport check_hessian_consistency(const StoredEnergyModel& model, std::span<const Matrix> samples,
                                            double step, double tolerance) {
  ConsistencyReport report{0.0, false};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Matrix& F = samples[i];
    const Hessian H = model.hessian(F);
    require_finite(H.flat(), i, F, "hessian");
    double scale = 1.0;
    for (double h : H.flat()) scale = std::max(scale, std::abs(h));
    const int n = H.rows();
    for (int q = 0; q < n; ++q) {
      Matrix plus = F, minus = F;
      plus.flat()[static_cast<std::size_t>(q)] += step;
      minus.flat()[static_cast<std::size_t>(q)] -= step;
      const Matrix Sp = model.stress(plus);
      const Matrix Sm = model.stress(minus);
      for (int p = 0; p < n; ++p) {
        const double fd = (Sp.flat()[static_cast<std::size_t>(p)] - Sm.flat()[static_cast<std::size_t>(p)]) / (2.0 * step);
        report.max_relative_error = std::max(report.max_relative_error, std::abs(fd - H(p, q)) / scale);
      }
    }
  }
  report.pass = report.max_relative_error < tolerance;
  return report;
}

double hessian_asymmetry(const StoredEnergyModel& model, std::span<const Matrix> samples) {
  double worst = 0.0;
  for (const Matrix& F : samples) {
    const Hessian H = model.hessian(F);
    double scale = 1.0;
    for (double h : H.flat()) scale = std::max(scale, std::abs(h));
    for (int p = 0; p < H.rows(); ++p)
      for (int q = 0; q < H.rows(); ++q) worst = std::max(worst, std::abs(H(p, q) - H(q, p)) / scale);
  }
  return worst;
}

GrowthReport check_growth(const StoredEnergyModel& model, std::span<const Matrix> samples) {
  const double p = model.growth_exponent();
  std::vector<double> r(samples.size()), W(samples.size());
  double C_energy = 0.0;
  double C_stress = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Matrix& F = samples[i];
    W[i] = model.energy(F);
    require_finite(W[i], i, F, "energy");
    const Matrix S = model.stress(F);
    require_finite(S.flat(), i, F, "stress");
    r[i] = F.norm();
    const double rp = std::pow(r[i], p);
    C_energy = std::max(C_energy, std::abs(W[i]) / (1.0 + rp));
    C_stress = std::max(C_stress, S.norm() / (1.0 + std::pow(r[i], p - 1.0)));
  }

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t j = order.size() - order.size() / 4; j < order.size(); ++j) {
    const std::size_t i = order[j];
    if (r[i] > 0) c = std::min(c, W[i] / std::pow(r[i], p));
  }
  c *= 0.5;
  double C_lower = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) C_lower = std::max(C_lower, c * std::pow(r[i], p) - W[i]);

  GrowthReport report{c, C_lower, C_energy, C_stress, false};
  report.pass = samples.size() >= 4 && std::isfinite(c) && c > 0.0 && std::isfinite(C_lower) &&
                std::isfinite(C_energy) && std::isfinite(C_stress);
  return report;
}

std::vector<Matrix> random_matrices(int dim, std::size_t count, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<Matrix> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Matrix m(dim);
    for (double& x : m.flat()) x = dist(rng);
    out.push_back(m);
  }
  return out;
}

std::vector<Matrix> radial_samples(int dim, std::size_t count, double max_norm, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Matrix> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Matrix m(dim);
    for (double& x : m.flat()) x = gauss(rng);
    const double n = m.norm();
    // log-spaced radii in [1e-3, max_norm]
    const double frac = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 1.0;
    const double radius = std::exp(std::log(1e-3) + frac * (std::log(max_norm) - std::log(1e-3)));
    if (n > 0) m *= radius / n;
    out.push_back(m);
  }
  return out;
}

}  // namespace kvsim

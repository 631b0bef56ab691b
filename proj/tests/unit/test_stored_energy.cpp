#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kvsim/errors.hpp"
#include "kvsim/stored_energy.hpp"

using namespace kvsim;

namespace {

std::vector<Matrix> scalars(std::initializer_list<double> values) {
  std::vector<Matrix> out;
  for (double v : values) out.push_back(Matrix::identity(1, v));
  return out;
}

std::vector<Matrix> scalar_grid(double lo, double hi, int count) {
  std::vector<Matrix> out;
  for (int i = 0; i < count; ++i) out.push_back(Matrix::identity(1, lo + (hi - lo) * i / (count - 1)));
  return out;
}

}  // namespace

TEST(Quadratic, StressIsIdentityMap) {
  const auto m = make_model("quadratic", {{"dim", 2}, {"mu", 1.0}});
  Matrix F(2);
  F(0, 0) = 0.3, F(0, 1) = -1.2, F(1, 0) = 2.0, F(1, 1) = 0.7;
  const Matrix S = m->stress(F);
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a) EXPECT_DOUBLE_EQ(S(i, a), F(i, a));
  const auto samples = random_matrices(2, 50, -3, 3, 1);
  const auto rep = check_semiconvexity(*m, samples);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.min_eigenvalue, 1.0, 1e-12);
}

TEST(Quartic, HessianAtZeroIsMinusIdentity) {
  const auto m = make_model("quartic", {{"dim", 2}, {"alpha", 1.0}});
  const Matrix Z(2);
  const Matrix S = m->stress(Z);
  for (double s : S.flat()) EXPECT_EQ(s, 0.0);
  const Hessian H = m->hessian(Z);
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q) EXPECT_NEAR(H(p, q), p == q ? -1.0 : 0.0, 1e-15);
  EXPECT_EQ(m->semiconvexity(), 1.0);
  EXPECT_EQ(m->stress_degree(), 3);
}

TEST(DoubleWell, EnergyAtOne) {
  const auto m = make_model("double_well");
  EXPECT_DOUBLE_EQ(m->energy(Matrix::identity(1, 1.0)), -0.25);
}

TEST(DoubleWell, SemiconvexityThresholdAtZero) {
  const auto m = make_model("double_well");
  const auto samples = scalar_grid(-2, 2, 401);
  const auto ok = check_semiconvexity(*m, samples, 1.0);
  EXPECT_TRUE(ok.pass);
  EXPECT_NEAR(ok.min_eigenvalue, 0.0, 1e-12);
  const auto bad = check_semiconvexity(*m, samples, 0.5);
  EXPECT_FALSE(bad.pass);
  EXPECT_NEAR(bad.min_eigenvalue, -0.5, 1e-12);
  EXPECT_NEAR(samples[bad.argmin_sample](0, 0), 0.0, 1e-12);
}

TEST(Monotonicity, QuadraticAndDoubleWell) {
  const auto quad = make_model("quadratic", {{"dim", 2}});
  const auto a = random_matrices(2, 40, -2, 2, 7), b = random_matrices(2, 40, -2, 2, 8);
  std::vector<std::pair<Matrix, Matrix>> pairs;
  for (std::size_t i = 0; i < a.size(); ++i) pairs.emplace_back(a[i], b[i]);
  EXPECT_TRUE(check_ab_monotonicity(*quad, pairs, MonotonicityVariant::AB).pass);

  const auto dw = make_model("double_well");
  std::vector<std::pair<Matrix, Matrix>> pairs1;
  const auto g = scalar_grid(-3, 3, 41);
  for (const auto& x : g)
    for (const auto& y : g) pairs1.emplace_back(x, y);
  EXPECT_TRUE(check_ab_monotonicity(*dw, pairs1, MonotonicityVariant::AB).pass);
  EXPECT_FALSE(check_ab_monotonicity(*dw, pairs1, MonotonicityVariant::AB, 0.0, 0.5).pass);
}

TEST(Monotonicity, QuarticStrengthenedCondition) {
  const auto m = make_model("quartic", {{"dim", 2}, {"alpha", 1.0}});
  const auto a = random_matrices(2, 300, -3, 3, 11), b = random_matrices(2, 300, -3, 3, 12);
  std::vector<std::pair<Matrix, Matrix>> pairs;
  for (std::size_t i = 0; i < a.size(); ++i) pairs.emplace_back(a[i], b[i]);
  const auto rep = check_ab_monotonicity(*m, pairs, MonotonicityVariant::ABprime);
  EXPECT_TRUE(rep.pass) << rep.worst_violation;
  // A constant above the admissible one must be caught.
  EXPECT_FALSE(check_ab_monotonicity(*m, pairs, MonotonicityVariant::ABprime, 2.0, 1.0).pass);
}

class EveryModel : public ::testing::TestWithParam<std::string> {};

TEST_P(EveryModel, DerivativesAreConsistent) {
  const auto catalog = builtin_models();
  const auto it = std::find_if(catalog.begin(), catalog.end(), [&](const auto& e) { return e.id == GetParam(); });
  ASSERT_NE(it, catalog.end());
  const auto& m = *it->model;
  const auto samples = m.id() == "piecewise" ? scalar_grid(0.05, 7.95, 97) : random_matrices(m.dim(), 60, -2, 2, 3);
  EXPECT_TRUE(check_gradient_consistency(m, samples).pass);
  EXPECT_TRUE(check_hessian_consistency(m, samples).pass);
  EXPECT_LT(hessian_asymmetry(m, samples), 1e-14);
  EXPECT_TRUE(check_semiconvexity(m, samples).pass);
  EXPECT_TRUE(check_growth(m, radial_samples(m.dim(), 200, 1e3, 5)).pass);
}

INSTANTIATE_TEST_SUITE_P(Builtin, EveryModel, ::testing::Values("quadratic", "quartic", "double_well", "piecewise"));

TEST(Piecewise, ConstructedLawMatchesClosedForm) {
  const auto law = default_piecewise_law();
  for (double u : {1.0, 1.25, 1.5, 2.0}) EXPECT_NEAR(law.sigma(u), 2.0 + 3.0 * u, 1e-13);
  for (double t : {1.0, 1.3, 2.0}) EXPECT_NEAR(law.common_value(t), 3.0 + 3.0 * t, 1e-13);
  EXPECT_LT(law.condition_residual(10001), 1e-12);
  EXPECT_LT(law.continuity_defect(), 1e-12);
  EXPECT_TRUE(law.increasing_on_branches());
  EXPECT_TRUE(law.is_nonmonotone());
  EXPECT_DOUBLE_EQ(law.sigma(2.0), 8.0);
  EXPECT_DOUBLE_EQ(law.sigma(3.0), 3.0);
}

TEST(Piecewise, RejectsOverlappingBranches) {
  EXPECT_THROW(PiecewiseStress1D::build(2.0, 3.0, {0.0, 1.0}), PreconditionError);
  EXPECT_THROW(PiecewiseStress1D::build(1.0, 3.0, {0.0, -1.0}), PreconditionError);
}

TEST(Piecewise, SerializationRoundTrip) {
  const auto law = PiecewiseStress1D::build(1.0, 3.0, {0.5, 1.0, 0.1}, 0.3);
  std::stringstream ss;
  law.write(ss);
  const auto back = PiecewiseStress1D::read(ss);
  for (double u = -1.0; u < 8.0; u += 0.37) EXPECT_EQ(back.sigma(u), law.sigma(u));
  EXPECT_LT(back.condition_residual(1001), 1e-12);
}

TEST(Piecewise, EnergyIsAntiderivative) {
  const auto m = make_model("piecewise");
  const auto samples = scalars({-0.5, 0.5, 1.5, 2.5, 3.5, 6.5, 8.0});
  EXPECT_TRUE(check_gradient_consistency(*m, samples).pass);
  EXPECT_DOUBLE_EQ(m->energy(Matrix::identity(1, 0.0)), 0.0);
}

TEST(Factory, RejectsUnknownIdsAndParameters) {
  EXPECT_THROW(make_model("neo_hookean"), PreconditionError);
  EXPECT_THROW(make_model("quartic", {{"beta", 1.0}}), PreconditionError);
  EXPECT_THROW(make_model("double_well", {{"dim", 2}}), PreconditionError);
}

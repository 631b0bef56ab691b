#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kvsim/errors.hpp"
#include "kvsim/oracles.hpp"
#include "kvsim/stored_energy.hpp"

using namespace kvsim;

namespace {
OscillationFamily default_family(int n = 1) { return OscillationFamily(default_piecewise_law(), n); }
}  // namespace

TEST(Family, ClosedFormFields) {
  const auto f = default_family();
  EXPECT_DOUBLE_EQ(f.Vbar_one(), 2.0);
  EXPECT_DOUBLE_EQ(f.U(1.5, 0.25), 1.5);
  EXPECT_DOUBLE_EQ(f.Y(1.3, 1.0), 1.3 * 2.0);
  EXPECT_DOUBLE_EQ(f.U(1.5, 0.75), 4.5);
  const auto f8 = default_family(8);
  EXPECT_EQ(f8.interfaces().size(), 17u);
  EXPECT_NEAR(f8.interface_distance(0.0625 + 0.01), 0.01, 1e-15);
}

TEST(Family, RejectsLawsWithoutTheCondition) {
  const auto law = default_piecewise_law();
  auto segments = law.segments();
  segments.back().poly = Polynomial({segments.back().poly.coefficients()[0] + 1.0, 1.0});
  EXPECT_THROW(OscillationFamily(PiecewiseStress1D::from_segments(1, 3, 0.5, segments)), PreconditionError);
  EXPECT_THROW(default_family(0), PreconditionError);
}

TEST(RankineHugoniot, HoldsOnAnyGrid) {
  const auto f = default_family();
  EXPECT_EQ(verify_rankine_hugoniot(f, {1.0}), 0.0);
  std::vector<double> ts;
  for (int i = 0; i <= 10000; ++i) ts.push_back(1.0 + i / 10000.0);
  EXPECT_LT(verify_rankine_hugoniot(default_family(16), ts), 1e-12);
  EXPECT_THROW(verify_rankine_hugoniot(f, {2.5}), PreconditionError);
}

TEST(ClassicalResidual, VanishesOffInterfaces) {
  const auto f = default_family(4);
  EXPECT_EQ(verify_classical_residual(f, {{1.2, 0.05}, {1.7, 0.2}, {1.7, 0.1 + 1e-3}}), 0.0);
  EXPECT_THROW(verify_classical_residual(f, {{1.0, 0.125}}), PreconditionError);
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back((i + 0.5) / 1000);
  EXPECT_LT(stress_flux_spread(f, 1.4, xs), 1e-12);
}

TEST(WeakLimits, GapIsFour) {
  const auto wl = weak_limits(default_family(), 1.0);
  EXPECT_NEAR(wl.stress_limit, 4.0, 1e-9);
  EXPECT_NEAR(wl.stress_of_limit, 8.0, 1e-9);
  EXPECT_NEAR(wl.gap, 4.0, 1e-3);
  EXPECT_TRUE(wl.gap_flagged);
  EXPECT_NEAR(weak_limits(default_family(), 1.5).u_limit, 3.0, 1e-9);
  EXPECT_NEAR(wl.v_gap_limit, 0.0, 1e-9);
}

TEST(WeakLimits, VelocityGapShrinksLikeOneOverN) {
  const auto wl = weak_limits(default_family(), 1.0, {4, 8, 16, 32});
  for (const auto& l : wl.levels) EXPECT_LE(l.v_l2_gap, 2.0 / l.n);
  EXPECT_NEAR(wl.levels[0].v_l2_gap / wl.levels[1].v_l2_gap, 2.0, 1e-9);
}

TEST(Richardson, RemovesPolynomialError) {
  std::vector<int> n{4, 8, 16, 32};
  std::vector<double> v;
  for (int k : n) v.push_back(3.0 + 1.0 / k - 2.0 / (k * k) + 0.5 / (k * k * k));
  EXPECT_NEAR(richardson_in_inverse_n(n, v), 3.0, 1e-12);
}

TEST(Dispersion, DoubleRootAndVieta) {
  const auto r = dispersion_roots(2, 1.0);
  EXPECT_TRUE(r.double_root);
  EXPECT_EQ(r.lambda_plus, Complex(-2.0));
  EXPECT_EQ(r.lambda_minus, Complex(-2.0));

  const auto r3 = dispersion_roots(3, 1.0);
  EXPECT_FALSE(r3.complex_pair);
  EXPECT_NEAR(r3.lambda_plus.real(), -1.145898033750315, 1e-12);
  EXPECT_NEAR(r3.lambda_minus.real(), -7.854101966249685, 1e-12);
  EXPECT_LT(r3.vieta_sum_error(), 1e-15);
  EXPECT_LT(r3.vieta_product_error(), 1e-15);
  EXPECT_NEAR(r3.asymptotic_printed, -1.0 - 2.0 / 9.0, 1e-15);
  EXPECT_NEAR(r3.asymptotic, -1.0 - 1.0 / 9.0, 1e-15);
  // The corrected expansion tracks the root to O(n^-4).
  const auto r40 = dispersion_roots(40, 1.0);
  EXPECT_LT(std::abs(r40.lambda_plus.real() - r40.asymptotic), 5.0 / std::pow(40.0, 4));

  const auto c = dispersion_roots(1, 1.0);
  EXPECT_TRUE(c.complex_pair);
  EXPECT_DOUBLE_EQ(c.lambda_plus.real(), -0.5);
  EXPECT_GT(c.lambda_plus.imag(), 0.0);
  EXPECT_THROW(dispersion_roots(0, 1.0), PreconditionError);
  EXPECT_THROW(dispersion_roots(1, 0.0), PreconditionError);
}

TEST(LinearDecay, MatchesSlowRoot) {
  const auto rep = verify_linear_decay(3, 1.0, 1e-5, 1.0);
  EXPECT_TRUE(rep.fit_accepted);
  EXPECT_LT(rep.rel_error, 1e-6);
  EXPECT_FALSE(rep.degenerate);
}

TEST(LinearDecay, DoubleRootUsesJordanEnvelope) {
  const auto rep = verify_linear_decay(2, 1.0, 1e-5, 1.0);
  EXPECT_TRUE(rep.degenerate);
  EXPECT_TRUE(rep.fit_accepted);
  EXPECT_LT(rep.rel_error, 1e-6);
  EXPECT_LT(rep.envelope_error, 1e-6);
}

TEST(LinearDecay, ComplexPairDecaysAtHalfNSquared) {
  const auto rep = verify_linear_decay(1, 1.0, 1e-4, 1.0);
  EXPECT_NEAR(rep.reference_rate, -0.5, 1e-15);
  EXPECT_LT(rep.rel_error, 1e-6);
}

TEST(Reporting, CsvAndSummary) {
  std::vector<OracleCheck> checks{{"a", 1e-13, 1e-12, true}, {"b", 2.0, 1.0, false}};
  std::ostringstream csv, txt;
  write_oracle_csv(csv, checks);
  write_oracle_summary(txt, checks);
  EXPECT_EQ(csv.str().substr(0, 25), "id,value,tolerance,pass\na");
  EXPECT_NE(csv.str().find("1.0000000000000000e-13"), std::string::npos);
  EXPECT_NE(txt.str().find("b 2.000000e+00 1.0e+00 FAIL"), std::string::npos);
}

#include <gtest/gtest.h>

#include <cmath>

#include "kvsim/diffusion_dispersion.hpp"
#include "kvsim/errors.hpp"
#include "kvsim/experiments.hpp"

using namespace kvsim;

namespace {

SolverConfig quartic_config(double dt, double t_end = 0.1) {
  SolverConfig c;
  c.dim = 2;
  c.N = 8;
  c.dt = dt;
  c.t_end = t_end;
  c.model_id = "quartic";
  c.model_params = {{"dim", 2}};
  c.record_every = 5;
  return c;
}

}  // namespace

TEST(Kappa, RootsOfTheQuadratic) {
  EXPECT_EQ(kappa_from(0.1, 0.01, 0.25), 0.05);
  EXPECT_EQ(kappa_from(0.1, 0.01, 0.25, RootChoice::Plus), 0.05);
  const double km = kappa_from(0.1, 0.001, 1.0), kp = kappa_from(0.1, 0.001, 1.0, RootChoice::Plus);
  EXPECT_NEAR(km, 0.011270166537925831, 1e-15);
  EXPECT_NEAR(kp, 0.088729833462074169, 1e-15);
  EXPECT_NEAR(km + kp, 0.1, 1e-16);
  EXPECT_NEAR(km * kp, 0.001, 1e-17);
  EXPECT_EQ(kappa_from(0.3, 0.0, 1.0), 0.0);
  EXPECT_EQ(kappa_from(0.3, 0.0, 1.0, RootChoice::Plus), 0.3);
}

TEST(Kappa, AdmissibilityFrontier) {
  for (double e : {0.01, 0.1, 1.0}) {
    EXPECT_NO_THROW(kappa_from(e, e * e, 0.25 - 1e-9));
    EXPECT_THROW(kappa_from(e, e * e, 0.25 + 1e-9), PreconditionError);
  }
  EXPECT_THROW(kappa_from(0.1, 0.01, 1.0), PreconditionError);
  EXPECT_THROW(kappa_from(0.0, 0.01, 0.1), PreconditionError);
  EXPECT_THROW(kappa_from(0.1, -0.01, 0.1), PreconditionError);
  try {
    kappa_from(0.1, 0.01, 1.0);
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("A"), std::string::npos);
  }
}

TEST(Kappa, ParsesRootNames) {
  EXPECT_EQ(parse_root_choice("minus"), RootChoice::Minus);
  EXPECT_EQ(parse_root_choice("+"), RootChoice::Plus);
  EXPECT_THROW(parse_root_choice("middle"), PreconditionError);
}

TEST(Transform, SingleModeAndLinearity) {
  KVState a = analytic_data(2, 4, 0.5, 0.5, 1), b = analytic_data(2, 4, 0.3, 0.7, 2);
  a.v = analytic_data(2, 4, 0.2, 0.5, 3).y;
  b.v = analytic_data(2, 4, 0.4, 0.5, 4).y;
  const double kappa = 0.37, alpha = -1.75;

  const KVState w = transform_state(a, kappa);
  const auto& m = a.y.modes();
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < m.count(); ++i)
      EXPECT_EQ(w.v(c, i), a.v(c, i) + kappa * static_cast<double>(m.squared_norm(i)) * a.y(c, i));

  KVState combo = a;
  combo.v = alpha * a.v + b.v;
  combo.y = alpha * a.y + b.y;
  const SpectralField lhs = transform_state(combo, kappa).v;
  const SpectralField rhs = alpha * transform_state(a, kappa).v + transform_state(b, kappa).v;
  for (std::size_t i = 0; i < lhs.coefficients().size(); ++i)
    EXPECT_NEAR(std::abs(lhs.coefficients()[i] - rhs.coefficients()[i]), 0.0, 1e-15);

  EXPECT_TRUE(transform_state(a, 0.0).v == a.v);
  const KVState back = untransform_state(w, kappa);
  for (std::size_t i = 0; i < back.v.coefficients().size(); ++i)
    EXPECT_NEAR(std::abs(back.v.coefficients()[i] - a.v.coefficients()[i]), 0.0, 1e-15);

  KVState flat = KVState::zero(2, 4, Matrix::identity(2, 2.0));
  flat.v = a.v;
  EXPECT_TRUE(transform_state(flat, 0.9).v == a.v);
  const SpectralField tv = transform_velocity(a.v, a.deformation(), kappa);
  for (std::size_t i = 0; i < tv.coefficients().size(); ++i)
    EXPECT_NEAR(std::abs(tv.coefficients()[i] - w.v.coefficients()[i]), 0.0, 1e-15);
}

TEST(Systems, ZeroCapillarityReproducesKelvinVoigt) {
  const KVState init = low_mode_data(2, 8, 0.5, Matrix::identity(2));
  SolverConfig c = quartic_config(0.01);
  c.epsilon = 0.4;
  const auto kv = run(c, init).final_state;
  const DDConfig dd = make_dd_config(0.4, 0.0, 1.0);
  const auto dis = solve_difdis(c, dd, init).final_state;
  EXPECT_TRUE(dis.v == kv.v);
  EXPECT_TRUE(dis.y == kv.y);
  const auto red = solve_difdisred(c, dd, init).final_state;
  EXPECT_TRUE(red.v == kv.v);
}

TEST(Systems, ZeroDataStaysZero) {
  const DDConfig dd = make_dd_config(0.1, 0.001, 1.0);
  const KVState zero = KVState::zero(2, 8, Matrix::identity(2));
  const auto dis = solve_difdis(quartic_config(0.01), dd, zero).final_state;
  const auto red = solve_difdisred(quartic_config(0.01), dd, zero).final_state;
  for (const auto& c : dis.v.coefficients()) EXPECT_EQ(c, Complex(0.0));
  for (const auto& c : red.v.coefficients()) EXPECT_EQ(c, Complex(0.0));
  for (const auto& c : red.y.coefficients()) EXPECT_EQ(c, Complex(0.0));
}

TEST(Equivalence, SameSchemeAgreesToRoundoff) {
  const DDConfig dd = make_dd_config(0.1, 0.001, 1.0);
  const KVState init = low_mode_data(2, 8, 0.5, Matrix::identity(2));
  for (Scheme s : {Scheme::IF_RK4, Scheme::IMEX_CNAB2}) {
    SolverConfig c = quartic_config(0.002, 0.1);
    c.scheme = s;
    EXPECT_LT(equivalence_check(c, dd, init).max_discrepancy, 1e-12);
  }
}

TEST(Equivalence, CrossSchemeDiscrepancyIsSecondOrder) {
  const DDConfig dd = make_dd_config(0.1, 0.001, 1.0);
  const KVState init = low_mode_data(2, 8, 0.5, Matrix::identity(2));
  std::vector<double> d;
  for (double dt : {0.004, 0.002, 0.001}) {
    SolverConfig c = quartic_config(dt, 0.2);
    c.record_every = static_cast<int>(std::lround(0.02 / dt));
    d.push_back(equivalence_check(c, dd, init, Scheme::IMEX_CNAB2).max_discrepancy);
  }
  EXPECT_GT(std::log2(d[0] / d[1]), 1.8);
  EXPECT_GT(std::log2(d[1] / d[2]), 1.8);
}

TEST(Equivalence, IdentityViscosityCase) {
  // delta = eps^2, A = 1/4: both equations of the reduced system carry eps/2.
  const DDConfig dd = make_dd_config(0.2, 0.04, 0.25);
  EXPECT_EQ(dd.kappa, 0.1);
  EXPECT_EQ(dd.epsilon - dd.kappa, dd.kappa);
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "kvsim/errors.hpp"
#include "kvsim/experiments.hpp"
#include "kvsim/solver.hpp"

using namespace kvsim;
namespace fs = std::filesystem;

namespace {

SolverConfig small_config(Scheme scheme, double dt = 0.01, double t_end = 0.2) {
  SolverConfig c;
  c.dim = 2;
  c.N = 8;
  c.dt = dt;
  c.t_end = t_end;
  c.scheme = scheme;
  c.model_id = "quartic";
  c.model_params = {{"dim", 2}};
  c.record_every = 5;
  return c;
}

double max_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.coefficients().size(); ++i)
    m = std::max(m, std::abs(a.coefficients()[i] - b.coefficients()[i]));
  return m;
}

KVState single_mode_1d(int N, int n, Complex y, Complex v) {
  KVState s = KVState::zero(1, N, Matrix::identity(1));
  const auto& m = s.y.modes();
  const std::size_t i = m.index({n, 0, 0});
  s.y(0, i) = y, s.y(0, m.conjugate_index(i)) = std::conj(y);
  s.v(0, i) = v, s.v(0, m.conjugate_index(i)) = std::conj(v);
  return s;
}

std::string fmt_dir(Scheme s) { return "kvsim_resume_" + std::string(to_string(s)); }

}  // namespace

TEST(Scheme, ParsesNames) {
  EXPECT_EQ(parse_scheme("IF_RK4"), Scheme::IF_RK4);
  EXPECT_EQ(parse_scheme("imex_cnab2"), Scheme::IMEX_CNAB2);
  EXPECT_THROW(parse_scheme("euler"), PreconditionError);
}

TEST(Exp2x2, MatchesDiagonalAndNilpotentCases) {
  const auto d = exp2x2(-1.0, 0.0, 0.0, -3.0, 0.5);
  EXPECT_NEAR(d[0], std::exp(-0.5), 1e-15);
  EXPECT_NEAR(d[3], std::exp(-1.5), 1e-15);
  const auto n = exp2x2(0.0, 1.0, 0.0, 0.0, 2.0);
  EXPECT_NEAR(n[0], 1.0, 1e-15);
  EXPECT_NEAR(n[1], 2.0, 1e-15);
  // Complex eigenvalues: rotation.
  const auto r = exp2x2(0.0, 1.0, -1.0, 0.0, 0.3);
  EXPECT_NEAR(r[0], std::cos(0.3), 1e-15);
  EXPECT_NEAR(r[1], std::sin(0.3), 1e-15);
}

TEST(Rhs, LinearSingleMode) {
  const double kappa = 2.0, eps = 0.5;
  const int n = 3;
  const auto model = make_model("quadratic", {{"dim", 1}, {"mu", kappa}});
  Integrator integ(model, Grid::for_degree(1, 4, 1), {0.0, eps, 0.0}, Scheme::IF_RK4, 0.01);
  const Complex y(0.2, -0.1), v(0.05, 0.3);
  const auto d = integ.rhs(single_mode_1d(4, n, y, v));
  const std::size_t i = d.dv.modes().index({n, 0, 0});
  EXPECT_NEAR(std::abs(d.dv(0, i) - (-kappa * n * n * y - eps * n * n * v)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(d.dy(0, i) - v), 0.0, 1e-15);
}

TEST(Rhs, UniformShearIsStationary) {
  const auto model = make_model("quartic", {{"dim", 2}});
  Matrix Fbar(2);
  Fbar(0, 0) = 1.0, Fbar(0, 1) = 0.7, Fbar(1, 1) = 1.3;
  Integrator integ(model, Grid::for_degree(2, 4, 3), {0.0, 1.0, 0.0}, Scheme::IF_RK4, 0.01);
  const auto d = integ.rhs(KVState::zero(2, 4, Fbar));
  for (const auto& c : d.dv.coefficients()) EXPECT_EQ(c, Complex(0.0));
  for (const auto& c : d.dy.coefficients()) EXPECT_EQ(c, Complex(0.0));
}

TEST(Step, HeatDecayIsExactUnderIntegratingFactor) {
  const auto model = make_model("quadratic", {{"dim", 1}, {"mu", 0.0}});
  const double eps = 0.7, dt = 0.05;
  const int n = 4;
  Integrator integ(model, Grid::for_degree(1, 5, 1), {0.0, eps, 0.0}, Scheme::IF_RK4, dt);
  KVState s = single_mode_1d(5, n, 0.0, Complex(0.3, 0.4));
  integ.step(s);
  const std::size_t i = s.v.modes().index({n, 0, 0});
  EXPECT_NEAR(std::abs(s.v(0, i)), 0.5 * std::exp(-eps * n * n * dt), 1e-15);
}

TEST(Run, ZeroDataStaysZeroAndShearIsStationary) {
  for (Scheme sc : {Scheme::IF_RK4, Scheme::IMEX_CNAB2}) {
    const auto out = run(small_config(sc), KVState::zero(2, 8, Matrix::identity(2)));
    for (const auto& c : out.final_state.v.coefficients()) EXPECT_EQ(c, Complex(0.0));
    Matrix Fbar = Matrix::identity(2, 1.4);
    Fbar(0, 1) = 0.2;
    const auto sh = run(small_config(sc), KVState::zero(2, 8, Fbar));
    for (const auto& c : sh.final_state.y.coefficients()) EXPECT_EQ(c, Complex(0.0));
    EXPECT_EQ(sh.final_state.Fbar(0, 1), 0.2);
  }
}

TEST(Run, InvariantsHoldAlongTrajectory) {
  KVState init = low_mode_data(2, 8, 0.5, Matrix::identity(2));
  const Complex v0(0.1, 0.0);
  init.v(0, init.v.modes().zero_index()) = v0;
  run(small_config(Scheme::IF_RK4), init, [&](const KVState& s, Integrator&) {
    EXPECT_NEAR(std::abs(s.v(0, s.v.modes().zero_index()) - v0), 0.0, 1e-15);
    EXPECT_EQ(s.Fbar(0, 0), 1.0);
    double curl_max = 0;
    const SpectralField curl = s.deformation_curl();
    for (const auto& c : curl.coefficients()) curl_max = std::max(curl_max, std::abs(c));
    EXPECT_EQ(curl_max, 0.0);
    EXPECT_LT(s.v.hermitian_defect(), 1e-15);
  });
}

TEST(Run, SchemesAgreeToSecondOrder) {
  const KVState init = low_mode_data(2, 8, 0.5, Matrix::identity(2));
  std::vector<double> gaps;
  for (double dt : {0.02, 0.01, 0.005}) {
    const auto a = run(small_config(Scheme::IF_RK4, dt, 0.4), init).final_state;
    const auto b = run(small_config(Scheme::IMEX_CNAB2, dt, 0.4), init).final_state;
    gaps.push_back(l2_norm(a.v - b.v) + l2_norm(a.y - b.y));
  }
  EXPECT_GT(std::log2(gaps[0] / gaps[1]), 1.8);
  EXPECT_GT(std::log2(gaps[1] / gaps[2]), 1.8);
}

TEST(Run, GuardTripsWithTime) {
  SolverConfig c = small_config(Scheme::IF_RK4);
  c.blowup_threshold = 1e-3;
  try {
    run(c, low_mode_data(2, 8, 0.5, Matrix::identity(2)));
    FAIL() << "expected BlowUpError";
  } catch (const BlowUpError& e) {
    EXPECT_GE(e.time(), 0.0);
    EXPECT_LE(e.time(), c.t_end);
  }
}

TEST(Config, ValidationNamesTheProblem) {
  SolverConfig c = small_config(Scheme::IF_RK4);
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), PreconditionError);
  c = small_config(Scheme::IF_RK4);
  c.model_params = {{"dim", 1}};
  EXPECT_THROW(run(c, KVState::zero(2, 8, Matrix::identity(2))), PreconditionError);
  c = small_config(Scheme::IF_RK4);
  c.checkpoint_every = 3;
  EXPECT_THROW(c.validate(), PreconditionError);
}

class Resume : public ::testing::TestWithParam<Scheme> {};

TEST_P(Resume, ContinuedTrajectoryMatches) {
  const fs::path dir = fs::temp_directory_path() / fmt_dir(GetParam());
  fs::remove_all(dir);
  SolverConfig c = small_config(GetParam(), 0.01, 0.3);
  c.checkpoint_every = 10;
  c.checkpoint_dir = dir;
  const KVState init = low_mode_data(2, 8, 0.5, Matrix::identity(2));
  const auto full = run(c, init).final_state;
  ASSERT_TRUE(fs::exists(dir / "step_00000010" / "v.kvsf"));
  SolverConfig r = c;
  r.checkpoint_every = 0;
  const auto resumed = resume(r, read_checkpoint(dir / "step_00000010")).final_state;
  EXPECT_LE(max_diff(full.v, resumed.v), 1e-13);
  EXPECT_LE(max_diff(full.y, resumed.y), 1e-13);
  EXPECT_NEAR(resumed.t, full.t, 1e-12);
  fs::remove_all(dir);
}

INSTANTIATE_TEST_SUITE_P(BothSchemes, Resume, ::testing::Values(Scheme::IF_RK4, Scheme::IMEX_CNAB2));

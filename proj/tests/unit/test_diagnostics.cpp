#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "kvsim/diagnostics.hpp"
#include "kvsim/errors.hpp"
#include "kvsim/experiments.hpp"

using namespace kvsim;
constexpr double pi = std::numbers::pi;

namespace {

KVState sine_velocity() {
  KVState s = KVState::zero(2, 3, Matrix(2));
  const auto& m = s.v.modes();
  s.v(0, m.index({1, 0, 0})) = Complex(0, -0.5);
  s.v(0, m.index({-1, 0, 0})) = Complex(0, 0.5);
  return s;
}

SolverConfig linear_1d(double dt) {
  SolverConfig c;
  c.dim = 1;
  c.N = 3;
  c.dt = dt;
  c.t_end = 1.0;
  c.model_id = "quadratic";
  c.model_params = {{"dim", 1}, {"mu", 1.0}};
  c.record_every = 1;
  return c;
}

KVState mode_1d(int N, int n, double y) {
  KVState s = KVState::zero(1, N, Matrix::identity(1));
  s.y(0, s.y.modes().index({n, 0, 0})) = y;
  s.y(0, s.y.modes().index({-n, 0, 0})) = y;
  return s;
}

}  // namespace

TEST(Energy, ClosedForms) {
  const auto quad = make_model("quadratic", {{"dim", 2}});
  FourierTransform fft(Grid::for_degree(2, 3, 1));
  EXPECT_EQ(energy(KVState::zero(2, 3, Matrix(2)), *quad, fft), 0.0);
  EXPECT_NEAR(energy(sine_velocity(), *quad, fft), pi * pi, 1e-12);

  const auto quart = make_model("quartic", {{"dim", 2}});
  FourierTransform fft4(Grid::for_degree(2, 3, 3));
  Matrix C(2);
  C(0, 0) = 1.5, C(1, 0) = -0.5, C(1, 1) = 0.8;
  EXPECT_NEAR(energy(KVState::zero(2, 3, C), *quart, fft4), quart->energy(C) * 4 * pi * pi, 1e-12);
  EXPECT_NEAR(dissipation(sine_velocity(), 2.0), 2.0 * 2 * pi * pi, 1e-12);
}

TEST(Modulated, ConstantDeformation) {
  const auto quart = make_model("quartic", {{"dim", 2}});
  FourierTransform fft(Grid::for_degree(2, 3, 3));
  Matrix C = Matrix::identity(2, 1.2);
  const auto me = modulated_energy(KVState::zero(2, 3, C), *quart, 1.0, 1.0, fft);
  EXPECT_NEAR(me.G, 2 * quart->energy(C) * 4 * pi * pi, 1e-11);
  EXPECT_EQ(me.Q, 0.0);
}

TEST(Modulated, QuadraticDissipationIsGradientNorms) {
  const auto quad = make_model("quadratic", {{"dim", 2}});
  FourierTransform fft(Grid::for_degree(2, 6, 1));
  KVState s = analytic_data(2, 6, 0.5, 0.6, 3);
  s.v = 0.5 * s.y;
  const auto me = modulated_energy(s, *quad, 1.0, 0.0, fft);
  EXPECT_NEAR(me.Q, h1_seminorm_squared(s.deformation()) + h1_seminorm_squared(s.v), 1e-12 * me.Q);
}

TEST(Modulated, QuarticNearZeroDeformationWithShift) {
  const auto quart = make_model("quartic", {{"dim", 2}});
  FourierTransform fft(Grid::for_degree(2, 4, 3));
  KVState s = analytic_data(2, 4, 1e-6, 0.5, 1);
  s.Fbar = Matrix(2);
  s.v = analytic_data(2, 4, 0.3, 0.5, 2).y;
  const auto me = modulated_energy(s, *quart, 1.0, quart->semiconvexity(), fft);
  EXPECT_NEAR(me.Q, h1_seminorm_squared(s.v), 1e-9 * me.Q);
}

TEST(Quadrature, CubicRuleIsExactForCubics) {
  std::vector<double> t, f;
  for (int i = 0; i <= 10; ++i) {
    const double x = 0.1 * i;
    t.push_back(x);
    f.push_back(1 - 2 * x + 3 * x * x * x);
  }
  const auto c = cumulative_integral(t, f, TimeQuadrature::Cubic);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = t[i];
    EXPECT_NEAR(c[i], x - x * x + 0.75 * x * x * x * x, 1e-14);
  }
  const auto tr = cumulative_integral({0.0, 1.0}, {0.0, 2.0}, TimeQuadrature::Trapezoid);
  EXPECT_DOUBLE_EQ(tr.back(), 1.0);
}

TEST(Balance, ZeroTrajectoryHasZeroResiduals) {
  SolverConfig c = linear_1d(0.01);
  const auto sim = simulate(c, KVState::zero(1, 3, Matrix::identity(1)));
  EXPECT_EQ(energy_balance_residual(sim.series), 0.0);
  EXPECT_EQ(modulated_inequality_residual(sim.series), 0.0);
  EXPECT_TRUE(gronwall_h1_bound(sim.series).pass);
  EXPECT_THROW(energy_balance_residual(sim.series, 2.0), PreconditionError);
}

TEST(Balance, TrapezoidResidualIsSecondOrder) {
  std::vector<double> r;
  for (double dt : {0.02, 0.01, 0.005})
    r.push_back(energy_balance_residual(simulate(linear_1d(dt), mode_1d(3, 2, 0.5), TimeQuadrature::Trapezoid).series));
  EXPECT_NEAR(r[0] / r[1], 4.0, 0.2);
  EXPECT_NEAR(r[1] / r[2], 4.0, 0.2);
}

TEST(Balance, LinearModeStaysBelowMajorant) {
  const auto sim = simulate(linear_1d(0.01), mode_1d(3, 2, 0.5));
  const auto g = gronwall_h1_bound(sim.series);
  EXPECT_TRUE(g.pass);
  EXPECT_LT(g.worst_ratio, 1.0);
  EXPECT_TRUE(energy_monotone(sim.series, 1e-12));
}

TEST(Modulated, DoubleWellInequalityAtCalibratedResolution) {
  SolverConfig c;
  c.dim = 1;
  c.N = 64;
  c.dt = 0.001;
  c.t_end = 1.0;
  c.model_id = "double_well";
  c.record_every = 1;
  const auto sim = simulate(c, low_mode_data(1, 64, 0.5, Matrix::identity(1)));
  EXPECT_EQ(sim.series.K, 1.0);
  const double G0 = sim.series.rows.front().G;
  EXPECT_LE(modulated_inequality_residual(sim.series), 1e-6 * (std::abs(G0) + 1));
  EXPECT_TRUE(gronwall_h1_bound(sim.series).pass);
}

TEST(Csv, SeventeenDigitsAndRoundTrip) {
  const auto sim = simulate(linear_1d(0.05), mode_1d(3, 1, 0.3));
  const auto path = std::filesystem::temp_directory_path() / "kvsim_diag_roundtrip.csv";
  write_csv(path, sim.series);
  const auto rows = read_csv(path);
  ASSERT_EQ(rows.size(), sim.series.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].E, sim.series.rows[i].E);
    EXPECT_EQ(rows[i].balance_residual, sim.series.rows[i].balance_residual);
  }
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header, "t,E,D,H1F,G,Q,Hs1,Hs2,Hs3,balance_residual,modulated_residual");
  std::getline(in, line);
  const auto comma = line.find(',');
  const std::string first = line.substr(0, comma);
  EXPECT_EQ(first.substr(first.find('.') + 1, 16).size(), 16u);
  std::filesystem::remove(path);
}

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kvsim/checkpoint.hpp"
#include "kvsim/errors.hpp"
#include "kvsim/spectral.hpp"

using namespace kvsim;
constexpr double pi = std::numbers::pi;

namespace {

SpectralField random_field(int dim, int N, FieldShape shape, unsigned seed) {
  SpectralField f(dim, N, shape);
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& c : f.coefficients()) c = {u(gen), u(gen)};
  f.enforce_hermitian();
  return f;
}

double max_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.coefficients().size(); ++i)
    m = std::max(m, std::abs(a.coefficients()[i] - b.coefficients()[i]));
  return m;
}

}  // namespace

TEST(ModeSet, LayoutAndConjugates) {
  const ModeSet m(2, 3);
  EXPECT_EQ(m.count(), 49u);
  EXPECT_EQ(m.wavevector(m.zero_index()), (Wavevector{0, 0, 0}));
  for (std::size_t i = 0; i < m.count(); ++i) {
    const auto k = m.wavevector(i), kc = m.wavevector(m.conjugate_index(i));
    EXPECT_EQ(k[0], -kc[0]);
    EXPECT_EQ(k[1], -kc[1]);
    EXPECT_EQ(m.index(k), i);
    EXPECT_EQ(m.squared_norm(i), k[0] * k[0] + k[1] * k[1]);
  }
  EXPECT_FALSE(m.contains({4, 0, 0}));
}

TEST(Grid, PaddingFollowsStressDegree) {
  EXPECT_EQ(Grid::for_degree(2, 64, 3).M(), 288);
  EXPECT_EQ(Grid::for_degree(2, 32, 3).M(), 144);
  EXPECT_GE(Grid::for_degree(1, 10, std::nullopt).M(), 32);
  EXPECT_GE(Grid::for_degree(1, 10, 1).M(), 22);
  for (int n : {5, 7, 25, 97}) {
    int m = Grid::fft_friendly_size(n);
    EXPECT_GE(m, n);
    EXPECT_EQ(m % 2, 0);
    while (m % 2 == 0) m /= 2;
    while (m % 3 == 0) m /= 3;
    EXPECT_EQ(m, 1);
  }
}

TEST(Transform, ConstantAndSine) {
  const Grid g(2, 4, 16);
  FourierTransform fft(g);
  PhysicalField one(g, FieldShape::Scalar);
  std::fill(one.values.begin(), one.values.end(), 1.0);
  const auto c = fft.forward(one);
  for (std::size_t i = 0; i < c.mode_count(); ++i)
    EXPECT_NEAR(std::abs(c(0, i) - (i == c.modes().zero_index() ? 1.0 : 0.0)), 0.0, 1e-15);

  PhysicalField s(g, FieldShape::Scalar);
  for (std::size_t p = 0; p < g.point_count(); ++p) s.values[p] = std::sin(g.point(p)[0]);
  const auto sc = fft.forward(s);
  const auto& m = sc.modes();
  EXPECT_NEAR(std::abs(sc(0, m.index({1, 0, 0})) - Complex(0, -0.5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(sc(0, m.index({-1, 0, 0})) - Complex(0, 0.5)), 0.0, 1e-15);
}

TEST(Transform, RoundTrip) {
  for (int dim : {1, 2, 3}) {
    const int N = dim == 3 ? 4 : 8;
    const Grid g = Grid::for_degree(dim, N, 3);
    FourierTransform fft(g);
    const auto f = random_field(dim, N, FieldShape::Vector, 3u + dim);
    const auto back = fft.forward(fft.inverse(f));
    EXPECT_LT(max_diff(f, back), 1e-13) << "dim " << dim;
    EXPECT_LT(back.hermitian_defect(), 1e-15);
  }
}

TEST(Calculus, GradientLaplacianDivergence) {
  SpectralField s(2, 4, FieldShape::Scalar);
  const auto& m = s.modes();
  s(0, m.index({1, 0, 0})) = Complex(0, -0.5);
  s(0, m.index({-1, 0, 0})) = Complex(0, 0.5);
  const auto g = gradient(s);  // cos(x1) e1
  EXPECT_NEAR(std::abs(g(0, m.index({1, 0, 0})) - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(g(0, m.index({-1, 0, 0})) - 0.5), 0.0, 1e-15);
  for (std::size_t i = 0; i < m.count(); ++i) EXPECT_EQ(g(1, i), Complex(0.0));

  SpectralField e(2, 4, FieldShape::Scalar);
  e(0, m.index({2, 0, 0})) = 1.0;
  EXPECT_EQ(laplacian(e)(0, m.index({2, 0, 0})), Complex(-4.0));

  const auto r = random_field(2, 6, FieldShape::Vector, 9);
  EXPECT_LT(max_diff(divergence(gradient(r)), laplacian(r)), 1e-13);
  EXPECT_LT(max_diff(curl(gradient(random_field(2, 6, FieldShape::Scalar, 10))), SpectralField(2, 6, FieldShape::Scalar)),
            1e-13);
}

TEST(Calculus, ResampleTruncatesAndPads) {
  const auto f = random_field(2, 6, FieldShape::Matrix, 4);
  const auto up = resample(f, 9);
  EXPECT_EQ(max_diff(resample(up, 6), f), 0.0);
  const auto down = resample(f, 3);
  for (std::size_t i = 0; i < down.mode_count(); ++i)
    EXPECT_EQ(down(1, i), f(1, f.modes().index(down.modes().wavevector(i))));
}

TEST(Stress, LinearModelIsIdentityOnCoefficients) {
  const auto model = make_model("quadratic", {{"dim", 2}});
  const Grid g = Grid::for_degree(2, 6, 1);
  FourierTransform fft(g);
  const auto F = random_field(2, 6, FieldShape::Matrix, 21);
  EXPECT_LT(max_diff(fft.nonlinear_stress(*model, F), F), 1e-13);
}

TEST(Stress, CubicIsAliasFree) {
  // sigma(u) = u^3 - u on u = cos x gives (3 cos x + cos 3x)/4 - cos x.
  const auto model = make_model("double_well");
  const Grid g = Grid::for_degree(1, 3, 3);
  FourierTransform fft(g);
  SpectralField u(1, 3, FieldShape::Matrix);
  u(0, u.modes().index({1, 0, 0})) = 0.5;
  u(0, u.modes().index({-1, 0, 0})) = 0.5;
  const auto S = fft.nonlinear_stress(*model, u);
  EXPECT_NEAR(std::abs(S(0, S.modes().index({1, 0, 0})) - (3.0 / 8.0 - 0.5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(S(0, S.modes().index({3, 0, 0})) - 1.0 / 8.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(S(0, S.modes().index({2, 0, 0}))), 0.0, 1e-15);
}

TEST(Stress, ConstantDeformation) {
  const auto model = make_model("quartic", {{"dim", 2}});
  const Grid g = Grid::for_degree(2, 4, 3);
  FourierTransform fft(g);
  SpectralField F(2, 4, FieldShape::Matrix);
  Matrix C(2);
  C(0, 0) = 1.2, C(0, 1) = -0.4, C(1, 0) = 0.3, C(1, 1) = 0.9;
  for (int c = 0; c < 4; ++c) F(c, F.modes().zero_index()) = C.flat()[c];
  const auto S = fft.nonlinear_stress(*model, F);
  const Matrix SC = model->stress(C);
  for (int c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < S.mode_count(); ++i)
      EXPECT_NEAR(std::abs(S(c, i) - (i == S.modes().zero_index() ? SC.flat()[c] : 0.0)), 0.0, 1e-14);
}

TEST(Stress, NonFiniteStressRaisesBlowUp) {
  const auto model = make_model("quartic", {{"dim", 1}});
  const Grid g = Grid::for_degree(1, 2, 3);
  FourierTransform fft(g);
  SpectralField F(1, 2, FieldShape::Matrix);
  F(0, F.modes().zero_index()) = 1e200;
  try {
    fft.nonlinear_stress(*model, F, 0.75);
    FAIL() << "expected BlowUpError";
  } catch (const BlowUpError& e) {
    EXPECT_EQ(e.time(), 0.75);
  }
}

TEST(Norms, ClosedForms) {
  SpectralField s(2, 2, FieldShape::Scalar);
  const auto& m = s.modes();
  s(0, m.index({1, 0, 0})) = Complex(0, -0.5);
  s(0, m.index({-1, 0, 0})) = Complex(0, 0.5);
  EXPECT_NEAR(std::pow(l2_norm(s), 2), 2 * pi * pi, 1e-12);
  EXPECT_NEAR(h1_norm(s), std::sqrt(2.0) * l2_norm(s), 1e-12);
  EXPECT_NEAR(hs_norm(s, 3), std::pow(2.0, 1.5) * l2_norm(s), 1e-12);

  const Grid g(2, 2, 8);
  FourierTransform fft(g);
  SpectralField c(2, 2, FieldShape::Scalar);
  c(0, c.modes().zero_index()) = -3.0;
  for (double p : {1.0, 2.0, 4.0}) EXPECT_NEAR(fft.lp_norm(c, p), 3.0 * std::pow(4 * pi * pi, 1.0 / p), 1e-11);
}

TEST(Snapshot, RoundTripIsBitExact) {
  const auto f = random_field(2, 5, FieldShape::Matrix, 77);
  std::stringstream ss;
  write_snapshot(ss, f, 0.125);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.substr(0, 4), "KVSF");
  const auto back = read_snapshot(ss);
  EXPECT_EQ(back.time, 0.125);
  EXPECT_TRUE(back.field == f);
}

TEST(Snapshot, RejectsCorruptInput) {
  std::stringstream bad("KVSX0000");
  EXPECT_THROW(read_snapshot(bad), IoError);
  const auto f = random_field(1, 3, FieldShape::Vector, 5);
  std::stringstream ss;
  write_snapshot(ss, f, 0.0);
  std::string bytes = ss.str();
  bytes.resize(bytes.size() - 8);
  std::stringstream truncated(bytes);
  EXPECT_THROW(read_snapshot(truncated), IoError);
}

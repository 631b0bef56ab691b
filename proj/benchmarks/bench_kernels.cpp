#include <benchmark/benchmark.h>

#include "kvsim/experiments.hpp"
#include "kvsim/solver.hpp"
#include "kvsim/spectral.hpp"
#include "kvsim/stored_energy.hpp"

using namespace kvsim;

namespace {

ModelPtr quartic_2d() { return make_model("quartic", {{"dim", 2}}); }

void BM_InverseForward(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const Grid grid = Grid::for_degree(2, N, 3);
  FourierTransform fft(grid);
  const KVState s = analytic_data(2, N, 0.5, 0.5, 1);
  for (auto _ : state) {
    const PhysicalField p = fft.inverse(s.y);
    benchmark::DoNotOptimize(fft.forward(p));
  }
  state.SetLabel("grid " + std::to_string(grid.M()));
}
BENCHMARK(BM_InverseForward)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_NonlinearStress(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const auto model = quartic_2d();
  FourierTransform fft(Grid::for_degree(2, N, model->stress_degree()));
  const SpectralField F = analytic_data(2, N, 0.5, 0.5, 2).deformation();
  for (auto _ : state) benchmark::DoNotOptimize(fft.nonlinear_stress(*model, F));
}
BENCHMARK(BM_NonlinearStress)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_Step(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const Scheme scheme = state.range(1) == 0 ? Scheme::IF_RK4 : Scheme::IMEX_CNAB2;
  const auto model = quartic_2d();
  Integrator integ(model, Grid::for_degree(2, N, model->stress_degree()), LinearSymbol{0.0, 1.0, 0.0}, scheme, 1e-3);
  KVState s = analytic_data(2, N, 0.5, 0.5, 3);
  for (auto _ : state) integ.step(s);
  state.SetLabel(std::string(to_string(scheme)));
}
BENCHMARK(BM_Step)->ArgsProduct({{16, 32, 64}, {0, 1}})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

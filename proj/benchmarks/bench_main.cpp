#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "homog/cell.hpp"
#include "homog/convergence.hpp"
#include "homog/czdecomp.hpp"
#include "homog/dioph.hpp"
#include "homog/ergodic.hpp"
#include "homog/halfspace.hpp"

using namespace homog;

namespace {

PeriodicTensor oscillating_tensor() {
  ModeBuilder mb(2, 1);
  mb.add_constant(0, 2.0).add_sin({1, 0}, 0, 1.0).add_cos({0, 1}, 0, 0.5);
  return PeriodicTensor::isotropic(mb.build(), 1, 0.2);
}

void BM_CellSolve(benchmark::State& state) {
  const PeriodicTensor a = oscillating_tensor();
  CellOptions opt;
  opt.resolution = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_corrector(a, opt).abar);
}
BENCHMARK(BM_CellSolve)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DiophConstant(benchmark::State& state) {
  const std::vector<double> n = golden_direction();
  const int Xi = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dioph_constant(n, 1.5, Xi).A_lb);
}
BENCHMARK(BM_DiophConstant)->Arg(200)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_QuasiperiodicIntegral(benchmark::State& state) {
  const PeriodicField K = random_band_limited(2, 5, 3, 1);
  const Frame f = build_frame(golden_direction());
  const SmoothWindow psi = SmoothWindow::gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(quasiperiodic_integral_quadrature(psi, K, f, 1.0 / 64));
}
BENCHMARK(BM_QuasiperiodicIntegral)->Unit(benchmark::kMillisecond);

void BM_Decompose(benchmark::State& state) {
  const double eps = std::ldexp(1.0, -static_cast<int>(state.range(0)));
  const ConvexDomain dom = ConvexDomain::disc();
  for (auto _ : state) benchmark::DoNotOptimize(decompose_diophantine(dom, eps, 0.02, 1.5, 200).cubes.size());
}
BENCHMARK(BM_Decompose)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_LayerSolve(benchmark::State& state) {
  const PeriodicTensor a = oscillating_tensor();
  const std::vector<double> n = golden_direction();
  ModeBuilder mb(2, 1);
  mb.add_cos({1, 1}, 0, 1.0);
  const PeriodicField V0 = mb.build();
  LayerOptions opt;
  opt.res_theta = static_cast<int>(state.range(0));
  opt.check_decay = false;
  for (auto _ : state) benchmark::DoNotOptimize(solve_layer(a, build_frame(n), V0, 0.0, 30.0, opt).tail);
}
BENCHMARK(BM_LayerSolve)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_MultigridSolve(benchmark::State& state) {
  const PeriodicTensor a = oscillating_tensor();
  const ConvexDomain dom = ConvexDomain::disc();
  const TwoScaleBoundaryDatum g({DatumTerm{SlowFactor::constant(1.0), PeriodicField::constant(2, {1.0})}});
  const double h = 1.0 / static_cast<double>(state.range(0));
  auto mesh = std::make_shared<const HexMesh>(dom, h);
  FemOptions opt;
  opt.direct_min_h = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(solve_oscillating(a, g, mesh, 8 * h, opt).stats.iterations);
  state.counters["nodes"] = static_cast<double>(mesh->nodes());
}
BENCHMARK(BM_MultigridSolve)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

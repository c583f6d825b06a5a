#include <cmath>
#include <numbers>

#include <benchmark/benchmark.h>

#include "stasim/analytics.hpp"
#include "stasim/classical.hpp"
#include "stasim/otto.hpp"
#include "stasim/quantum.hpp"

using namespace stasim;

namespace {

const double kWi = 10.0;
const double kWf = 10.0 * std::numbers::sqrt3;

void BM_Trajectory(benchmark::State& state) {
  const auto p = FrequencyProtocol::cosine_ramp(kWi, kWf, 1e-4 * static_cast<double>(state.range(0)));
  const auto drive = state.range(1) ? Drive::counterdiabatic : Drive::bare;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto s = gibbs_sample(1, i++, 0.2, kWi, {});
    benchmark::DoNotOptimize(integrate(s, p, drive, {}));
  }
}
BENCHMARK(BM_Trajectory)->ArgsProduct({{1, 1000}, {0, 1}});

void BM_FlowMapEnsemble(benchmark::State& state) {
  const auto p = FrequencyProtocol::cosine_ramp(kWi, kWf, 1e-4);
  const EnsembleSpec spec{0.2, static_cast<std::size_t>(state.range(0)), 3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(ensemble_work(spec, p, Drive::bare, {}, EnsembleMethod::flow_map));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FlowMapEnsemble)->Arg(100000);

void BM_BasicSolutions(benchmark::State& state) {
  const auto p = FrequencyProtocol::cosine_ramp(kWi, kWf, 1e-4 * static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(basic_solutions(p));
}
BENCHMARK(BM_BasicSolutions)->Arg(1)->Arg(1000);

void BM_BesselI0(benchmark::State& state) {
  double x = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bessel_i0_scaled(x));
    x = x > 800.0 ? 0.0 : x + 0.731;
  }
}
BENCHMARK(BM_BesselI0);

void BM_TransitionMatrix(benchmark::State& state) {
  const auto p = FrequencyProtocol::cosine_ramp(kWi, kWf, 1e-4);
  FockBasisConfig cfg;
  cfg.dimension = static_cast<std::size_t>(state.range(0));
  cfg.omega_ref = kWi;
  for (auto _ : state) benchmark::DoNotOptimize(transition_matrix(p, Drive::bare, cfg, 32));
}
BENCHMARK(BM_TransitionMatrix)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_OptimizeFrequency(benchmark::State& state) {
  OttoCycleSpec spec;
  spec.beta_cold = 10.0;
  spec.beta_hot = 1.0;
  spec.omega_i = 10.0;
  spec.regime = state.range(0) ? Regime::quantum : Regime::classical;
  spec.constants.hbar = 1.0 / (2.0 * std::numbers::pi);
  for (auto _ : state) benchmark::DoNotOptimize(optimize_frequency(spec));
}
BENCHMARK(BM_OptimizeFrequency)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();

// Serial reference against the OpenMP kernel for each parallel hot path.
// Run with OMP_NUM_THREADS set to compare worker counts.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "birkhoff/continued_fraction.hpp"
#include "birkhoff/deviation_stats.hpp"
#include "birkhoff/thermo.hpp"

using namespace birkhoff;

namespace {

stats::ExperimentConfig gauss_ensemble(std::size_t samples) {
  stats::ExperimentConfig c;
  c.eps_grid = {0.4, 0.3};
  c.n_max = 400;
  c.samples = samples;
  c.seed = 3;
  return c;
}

void BM_EnsembleSerial(benchmark::State& state) {
  const auto c = gauss_ensemble(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(stats::run_ensemble_serial(c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EnsembleParallel(benchmark::State& state) {
  const auto c = gauss_ensemble(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(stats::run_ensemble(c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_AssembleSerial(benchmark::State& state) {
  const thermo::PressureSolver solver;
  for (auto _ : state) benchmark::DoNotOptimize(solver.assemble_serial(1.3, static_cast<int>(state.range(0))));
}

void BM_AssembleParallel(benchmark::State& state) {
  const thermo::PressureSolver solver;
  for (auto _ : state) benchmark::DoNotOptimize(solver.assemble(1.3, static_cast<int>(state.range(0))));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_IdentitySerial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(cf::identity_batch_serial(5, static_cast<std::size_t>(state.range(0)), 30, 256));
}

void BM_IdentityParallel(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(cf::identity_batch(5, static_cast<std::size_t>(state.range(0)), 30, 256));
  state.counters["threads"] = omp_get_max_threads();
}

}  // namespace

BENCHMARK(BM_EnsembleSerial)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleParallel)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleSerial)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleParallel)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IdentitySerial)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IdentityParallel)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <vector>

#include "fracheat/energy.hpp"
#include "fracheat/noise_field.hpp"
#include "fracheat/rng.hpp"
#include "fracheat/stable.hpp"

using namespace fracheat;

namespace {

Model default_model() {
  ModelParams p;
  p.alpha = 2.0;
  p.hurst = {0.75, 0.75};
  p.dim = 1;
  p.base_point = {0.0};
  return Model(p);
}

void BM_SamplePath(benchmark::State& state) {
  const Model m = default_model();
  const auto n = static_cast<std::size_t>(state.range(0));
  RandomStream rng = derive_stream(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_path(m, n, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SamplePath)->Arg(256)->Arg(1024);

void BM_SelfEnergy(benchmark::State& state) {
  const Model m = default_model();
  const auto n = static_cast<std::size_t>(state.range(0));
  RandomStream rng = derive_stream(2, 0);
  const LevyPath path = sample_path(m, n, rng);
  const EnergyGrid grid(m, n, 1.0 / static_cast<double>(n));
  for (auto _ : state) benchmark::DoNotOptimize(grid.self(path, n));
}
BENCHMARK(BM_SelfEnergy)->Arg(64)->Arg(256)->Arg(1024);

void BM_SheetSample(benchmark::State& state) {
  const Model m = default_model();
  const SheetGrid grid = make_sheet_grid(m, 1.0, static_cast<std::size_t>(state.range(0)),
                                         static_cast<std::size_t>(state.range(1)));
  const SheetSampler sampler(grid, {0.75, 0.75});
  RandomStream rng = derive_stream(3, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(rng));
}
BENCHMARK(BM_SheetSample)->Args({32, 120})->Args({32, 64});

}  // namespace
BENCHMARK_MAIN();

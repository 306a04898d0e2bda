#include <benchmark/benchmark.h>

#include "vecchia/vecchia.hpp"

namespace {

const vecchia::Locations& grid() {
  static const auto locs = vecchia::Locations::regular_grid({100, 100});
  return locs;
}

const vecchia::Permutation& maximin() {
  static const auto perm = vecchia::order_ammd(grid());
  return perm;
}

void BM_NeighborSearch(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(vecchia::nn_ordered_fast(grid(), maximin(), m));
}
BENCHMARK(BM_NeighborSearch)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_Grouping(benchmark::State& state) {
  const auto sets = vecchia::nn_ordered_fast(grid(), maximin(), static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vecchia::group_blocks(sets));
}
BENCHMARK(BM_Grouping)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

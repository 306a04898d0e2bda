#include <benchmark/benchmark.h>

#include "vecchia/vecchia.hpp"

namespace {

void BM_Ordering(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(1));
  const auto locs = vecchia::Locations::regular_grid({side, side});
  const auto scheme = static_cast<vecchia::OrderingScheme>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(vecchia::make_ordering(scheme, locs, 1));
  state.SetLabel(std::string(vecchia::to_string(scheme)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(locs.size()));
}
BENCHMARK(BM_Ordering)
    ->ArgsProduct({{static_cast<int>(vecchia::OrderingScheme::coordinate), static_cast<int>(vecchia::OrderingScheme::middle_out),
                    static_cast<int>(vecchia::OrderingScheme::random), static_cast<int>(vecchia::OrderingScheme::ammd)},
                   {50, 100}})
    ->Unit(benchmark::kMillisecond);

void BM_MmdExact(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto locs = vecchia::Locations::regular_grid({side, side});
  for (auto _ : state) benchmark::DoNotOptimize(vecchia::order_mmd_exact(locs));
}
BENCHMARK(BM_MmdExact)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "vecchia/vecchia.hpp"

namespace {

// Args: m, grouped, smoothness x 10.
void BM_Loglik(benchmark::State& state) {
  static const auto locs = vecchia::Locations::regular_grid({100, 100});
  static const auto perm = vecchia::order_ammd(locs);
  const auto m = static_cast<std::size_t>(state.range(0));
  const bool grouped = state.range(1) != 0;
  const vecchia::VecchiaStructure structure(locs, perm, {m, grouped, vecchia::NeighborDistance::spatial, 1});
  const auto model = vecchia::CovarianceModel::matern(1.0, 0.1, static_cast<double>(state.range(2)) / 10.0, 0.01);
  const std::vector<double> y = perm.apply(std::vector<double>(locs.size(), 0.5));
  for (auto _ : state) {
    const auto gamma = structure.build(model, locs, 1);
    benchmark::DoNotOptimize(vecchia::loglik(gamma, y));
  }
}
BENCHMARK(BM_Loglik)->ArgsProduct({{10, 30}, {0, 1}, {5, 8}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

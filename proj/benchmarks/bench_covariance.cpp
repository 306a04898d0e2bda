#include <benchmark/benchmark.h>

#include "vecchia/vecchia.hpp"

namespace {

void BM_MaternCorrelation(benchmark::State& state) {
  const double nu = static_cast<double>(state.range(0)) / 10.0;
  double s = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(vecchia::matern_correlation(s, nu));
    s = s < 5.0 ? s * 1.001 : 0.01;
  }
}
BENCHMARK(BM_MaternCorrelation)->Arg(5)->Arg(15)->Arg(25)->Arg(8)->Arg(32);

void BM_CovarianceBlock(benchmark::State& state) {
  const auto locs = vecchia::Locations::regular_grid({40, 40});
  const auto model = vecchia::CovarianceModel::matern(1.0, 0.1, static_cast<double>(state.range(1)) / 10.0);
  std::vector<int> idx(static_cast<std::size_t>(state.range(0)));
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k * 7 % locs.size());
  for (auto _ : state) benchmark::DoNotOptimize(vecchia::build_cov_matrix(model, locs, idx));
}
BENCHMARK(BM_CovarianceBlock)->Args({31, 5})->Args({31, 8})->Args({100, 5})->Args({100, 8});

}  // namespace

BENCHMARK_MAIN();

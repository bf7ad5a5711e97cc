#include <benchmark/benchmark.h>

#include <vector>

#include "relpol/rng.hpp"
#include "relpol/stattest.hpp"

namespace {

void BM_RankSumExact(benchmark::State& state) {
  relpol::Rng rng(3);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), y(n);
  for (auto& v : x) v = rng.uniform01();
  for (auto& v : y) v = rng.uniform01();
  for (auto _ : state) {
    benchmark::DoNotOptimize(relpol::stattest::wilcoxon_rank_sum(x, y));
  }
}
BENCHMARK(BM_RankSumExact)->Arg(5)->Arg(10);  // 10v10 is the largest exact case

void BM_RankSumNormalApprox(benchmark::State& state) {
  relpol::Rng rng(4);
  std::vector<double> x(200), y(200);
  for (auto& v : x) v = rng.uniform01();
  for (auto& v : y) v = rng.uniform01();
  for (auto _ : state) {
    benchmark::DoNotOptimize(relpol::stattest::wilcoxon_rank_sum(x, y));
  }
}
BENCHMARK(BM_RankSumNormalApprox);

}  // namespace

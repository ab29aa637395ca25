#include <random>

#include <benchmark/benchmark.h>

#include "trajrep/clustering.hpp"

namespace {

Eigen::MatrixXd blobs(int n, int d) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) x(i, c) = 8.0 * (i % 4) + g(rng);
  return x;
}

void BM_Dbscan(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto x = blobs(n, 8);
  for (auto _ : state) benchmark::DoNotOptimize(trajrep::dbscan(x, 3.0, 5));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Dbscan)->RangeMultiplier(2)->Range(128, 2048)->Complexity(benchmark::oNSquared);

void BM_PcaFit(benchmark::State& state) {
  const auto x = blobs(800, 3 * static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(trajrep::pca_fit(x, 0.9));
}
BENCHMARK(BM_PcaFit)->Arg(30)->Arg(90)->Unit(benchmark::kMillisecond);

}  // namespace

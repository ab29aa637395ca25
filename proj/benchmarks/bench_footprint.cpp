#include <random>

#include <benchmark/benchmark.h>

#include "trajrep/footprint.hpp"

namespace {

using namespace trajrep;

std::vector<Trajectory> tracks(int count) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> heading(-0.5, 0.5);
  std::vector<Trajectory> out;
  for (int k = 0; k < count; ++k) {
    Trajectory t;
    t.id = "T" + std::to_string(k);
    const double h = heading(rng);
    for (int s = 0; s < 250; ++s) {
      const double d = 100.0 * s;
      t.points.push_back({static_cast<double>(s), d * std::cos(h), d * std::sin(h), 0.05 * d});
    }
    out.push_back(std::move(t));
  }
  return out;
}

void BM_FootprintRaw(benchmark::State& state) {
  const auto t = tracks(static_cast<int>(state.range(0)));
  const auto spec = GridSpec::covering(t, 300.0, 100, 100);
  const auto proximity = state.range(1) ? Proximity::Segments : Proximity::Points;
  for (auto _ : state) benchmark::DoNotOptimize(footprint_raw(t, spec, 300.0, 0, proximity));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FootprintRaw)->Args({100, 0})->Args({800, 0})->Args({100, 1})->Unit(benchmark::kMillisecond);

}  // namespace

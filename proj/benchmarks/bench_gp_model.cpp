#include <random>

#include <benchmark/benchmark.h>

#include "trajrep/gp_model.hpp"

namespace {

using namespace trajrep;

std::vector<TrajectoryDesign> designs(int basis_count, int trajectories, int points) {
  const auto basis = BasisSet::uniform(basis_count);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<TrajectoryDesign> out;
  for (int n = 0; n < trajectories; ++n) {
    NormalizedTrajectory t;
    t.coords.resize(points, 3);
    const double bend = g(rng);
    for (int k = 0; k < points; ++k) {
      const double tau = static_cast<double>(k) / (points - 1);
      t.tau.push_back(tau);
      t.coords.row(k) << tau + g(rng) * 0.1, bend * tau * tau, 0.3 * tau + g(rng) * 0.1;
    }
    out.push_back(make_design(basis, t));
  }
  return out;
}

ModelParams start(int basis_count) {
  const auto dim = 3 * basis_count;
  return {Eigen::VectorXd::Zero(dim), 1e3 * Eigen::MatrixXd::Identity(dim, dim), 1e3};
}

void BM_EStep(benchmark::State& state) {
  const int j = static_cast<int>(state.range(0));
  const auto d = designs(j, 200, 60);
  const auto p = start(j);
  for (auto _ : state) benchmark::DoNotOptimize(e_step(p, d));
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_EStep)->Arg(6)->Arg(12)->Arg(18);

void BM_EmFit(benchmark::State& state) {
  const int j = static_cast<int>(state.range(0));
  const auto d = designs(j, 150, 60);
  EmOptions opt;
  opt.max_iterations = 20;
  for (auto _ : state) benchmark::DoNotOptimize(em_fit(d, BasisSet::uniform(j), opt));
}
BENCHMARK(BM_EmFit)->Arg(8)->Arg(18)->Unit(benchmark::kMillisecond);

}  // namespace

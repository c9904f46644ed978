// Parallel kernels against their serial twins.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "spatial/kernels.hpp"
#include "spatial/parallel.hpp"
#include "spatial/pointproc.hpp"

using namespace spatial;

namespace {

std::vector<Location> cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Location> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Location{u(rng), u(rng)});
  return out;
}

const CovarianceModel kModel = CovarianceModel::make(Family::Matern, 1.0, 0.2, 0.01, 1.5);

template <bool Parallel>
void BM_Gram(benchmark::State& state) {
  const auto locs = cloud(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    if constexpr (Parallel) benchmark::DoNotOptimize(kernels::gram_matrix(kModel, locs));
    else benchmark::DoNotOptimize(reference::gram_matrix(kModel, locs));
  }
}
BENCHMARK(BM_Gram<false>)->Arg(500)->Arg(1500);
BENCHMARK(BM_Gram<true>)->Arg(500)->Arg(1500);

template <bool Parallel>
void BM_KSums(benchmark::State& state) {
  const auto p = simulate_homogeneous_poisson(Window::unit_square(), static_cast<double>(state.range(0)), 2);
  const std::vector<double> radii{0.02, 0.05, 0.1, 0.15, 0.2};
  for (auto _ : state) {
    if constexpr (Parallel) benchmark::DoNotOptimize(kernels::k_function_sums(p.points(), p.window(), radii));
    else benchmark::DoNotOptimize(reference::k_function_sums(p.points(), p.window(), radii));
  }
}
BENCHMARK(BM_KSums<false>)->Arg(500)->Arg(2000);
BENCHMARK(BM_KSums<true>)->Arg(500)->Arg(2000);

template <bool Parallel>
void BM_NearestPredecessors(benchmark::State& state) {
  const auto locs = cloud(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    if constexpr (Parallel) benchmark::DoNotOptimize(kernels::nearest_predecessors(locs, 20));
    else benchmark::DoNotOptimize(reference::nearest_predecessors(locs, 20));
  }
}
BENCHMARK(BM_NearestPredecessors<false>)->Arg(2000)->Arg(8000);
BENCHMARK(BM_NearestPredecessors<true>)->Arg(2000)->Arg(8000);

template <bool Parallel>
void BM_VecchiaFactors(benchmark::State& state) {
  const auto locs = cloud(static_cast<std::size_t>(state.range(0)), 4);
  const auto nb = kernels::nearest_predecessors(locs, 20);
  std::vector<Eigen::VectorXd> coef;
  Eigen::VectorXd resid;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::vecchia_node_factors(kModel, locs, nb, 0.0, coef, resid);
    else reference::vecchia_node_factors(kModel, locs, nb, 0.0, coef, resid);
    benchmark::DoNotOptimize(resid.data());
  }
}
BENCHMARK(BM_VecchiaFactors<false>)->Arg(2000)->Arg(8000);
BENCHMARK(BM_VecchiaFactors<true>)->Arg(2000)->Arg(8000);

}  // namespace

BENCHMARK_MAIN();

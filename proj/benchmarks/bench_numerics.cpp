#include "epimem/numerics.hpp"
#include "epimem/random.hpp"

#include <benchmark/benchmark.h>

using namespace epimem;

static void BM_Pinv(benchmark::State& state) {
  const auto k = static_cast<Eigen::Index>(state.range(0));
  const Matrix a = gaussian_matrix(k, k * 3 / 2, 1);
  for (auto _ : state) benchmark::DoNotOptimize(pinv(a));
}
BENCHMARK(BM_Pinv)->Arg(16)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_SolveCovariance(benchmark::State& state) {
  const auto k = static_cast<Eigen::Index>(state.range(0));
  const Matrix w = gaussian_matrix(2 * k, k, 2);
  const Matrix c = w.transpose() * w;
  const Matrix rhs = gaussian_matrix(k, 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(solve_covariance_refined(c, rhs));
}
BENCHMARK(BM_SolveCovariance)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

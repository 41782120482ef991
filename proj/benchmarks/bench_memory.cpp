#include "epimem/codec.hpp"
#include "epimem/experiments.hpp"
#include "epimem/facts.hpp"
#include "epimem/memory.hpp"
#include "epimem/random.hpp"
#include "epimem/scope.hpp"
#include "epimem/sequential.hpp"

#include <benchmark/benchmark.h>

using namespace epimem;

// One sequential write followed by a read of the same prompt, the unit of
// work behind the per-edit latency the experiments report.
static void BM_SequentialWriteRead(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  EncoderConfig ec;
  ec.latent_dim = static_cast<std::size_t>(state.range(1));
  const Encoder enc(ec);
  const auto facts = synthetic_facts(64, 0, 4);
  auto ref = std::make_shared<const ReferenceMemory>(
      build_reference(ReferenceRecipe::kRandomGaussian, enc, facts, k, 5));
  FactMemory memory(enc, ref, AddressingMode::pinv_reference());
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& f = facts[i++ % facts.size()];
    memory.write(f.prompt, f.answer);
    benchmark::DoNotOptimize(memory.readout(f.prompt));
  }
}
BENCHMARK(BM_SequentialWriteRead)->Args({64, 64})->Args({512, 768})->Unit(benchmark::kMillisecond);

static void BM_OneShotWrite(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const auto prior = MemoryState::random_prior(64, 64, 6);
  const EpisodeEncoding z(gaussian_matrix(n, 64, 7));
  for (auto _ : state) benchmark::DoNotOptimize(write_episode(prior, z));
}
BENCHMARK(BM_OneShotWrite)->Arg(16)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

static void BM_GaussianWeights(benchmark::State& state) {
  const auto k = static_cast<Eigen::Index>(state.range(0));
  const Matrix ref = gaussian_matrix(k, 64, 8);
  const Vector z = gaussian_matrix(64, 1, 9).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_weights(z, ref, 1e-3));
}
BENCHMARK(BM_GaussianWeights)->Arg(64)->Arg(1000);

static void BM_ScopeDetect(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(10);
  std::vector<Vector> rows;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    rows.push_back(gaussian_matrix(64, 1, rng).col(0));
    ids.push_back(std::to_string(i));
  }
  ScopeStore store(64);
  store.add(rows, ids);
  const Vector q = gaussian_matrix(64, 1, rng).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(detect(store, q, 0.5));
}
BENCHMARK(BM_ScopeDetect)->Arg(1000)->Arg(10000);

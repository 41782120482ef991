#include "epimem/codec.hpp"
#include "epimem/facts.hpp"

#include <benchmark/benchmark.h>

using namespace epimem;

static void BM_Encode(benchmark::State& state) {
  EncoderConfig ec;
  ec.latent_dim = static_cast<std::size_t>(state.range(0));
  const Encoder enc(ec);
  const std::string text = "the capital city of ruvokan telmira is karosu vimi";
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(text));
}
BENCHMARK(BM_Encode)->Arg(64)->Arg(768);

static void BM_DecodeRetrieve(benchmark::State& state) {
  const Encoder enc(EncoderConfig{});
  const auto facts = synthetic_facts(static_cast<std::size_t>(state.range(0)), 0, 11);
  const auto answers = unique_answers(facts);
  const Vector z = enc.encode_fact(facts[0]);
  for (auto _ : state) {
    const auto vocab = prompt_conditioned_vocabulary(enc, facts[0].prompt, answers);
    benchmark::DoNotOptimize(decode_retrieve(vocab, z));
  }
}
BENCHMARK(BM_DecodeRetrieve)->Arg(64)->Arg(512);

BENCHMARK_MAIN();

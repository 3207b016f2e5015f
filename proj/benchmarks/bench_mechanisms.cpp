#include <benchmark/benchmark.h>

#include "dpol/mechanisms.hpp"
#include "dpol/rng.hpp"

namespace {

void BM_LaplaceDraw(benchmark::State& state) {
  dpol::RngStream rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rng.laplace(2.0));
  }
}
BENCHMARK(BM_LaplaceDraw);

void BM_ExponentialMechanism(benchmark::State& state) {
  dpol::RngStream rng(2);
  std::vector<double> scores(state.range(0));
  for (size_t i = 0; i < scores.size(); ++i)
    scores[i] = static_cast<double>(i % 17);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dpol::sample_exponential_mechanism(rng, scores, 0.05));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExponentialMechanism)->Arg(16)->Arg(256)->Arg(4096);

void BM_AboveThresholdQuery(benchmark::State& state) {
  dpol::RngStream rng(3);
  for (auto _ : state) {
    state.PauseTiming();
    dpol::AboveThresholdSession session(1.0, 1e9, 0.05, 1 << 20, rng);
    state.ResumeTiming();
    for (int i = 0; i < 1024; ++i)
      benchmark::DoNotOptimize(session.add_query(1.0, rng));
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_AboveThresholdQuery);

void BM_BinaryTreeFeedScalar(benchmark::State& state) {
  dpol::RngStream rng(4);
  const size_t T = static_cast<size_t>(state.range(0));
  for (auto _ : state) {
    dpol::BinaryTreeCounter tree(T, dpol::PrivacyBudget::pure(1.0), 1.0);
    for (size_t t = 0; t < T; ++t)
      benchmark::DoNotOptimize(tree.feed(0.5, rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BinaryTreeFeedScalar)->Arg(1 << 10)->Arg(1 << 14);

void BM_BinaryTreeFeedVector(benchmark::State& state) {
  dpol::RngStream rng(5);
  const size_t T = 1 << 12;
  const size_t d = static_cast<size_t>(state.range(0));
  std::vector<double> g(d, 0.1);
  for (auto _ : state) {
    dpol::BinaryTreeCounter tree(T, d, {1.0, 1e-6}, 1.0);
    for (size_t t = 0; t < T; ++t) benchmark::DoNotOptimize(tree.feed(g, rng));
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_BinaryTreeFeedVector)->Arg(5)->Arg(20);

}  // namespace

#include <benchmark/benchmark.h>

#include "dpol/dartboard.hpp"
#include "dpol/oco.hpp"
#include "dpol/potential_experts.hpp"
#include "dpol/svt_experts.hpp"

namespace {

dpol::LossSequence make_instance(size_t T, size_t d) {
  dpol::RngStream rng(11);
  return dpol::gen_realizable(rng, T, d, rng.uniform_index(d), 1.0);
}

void BM_SvtZeroLoss(benchmark::State& state) {
  const size_t T = static_cast<size_t>(state.range(0));
  const size_t d = static_cast<size_t>(state.range(1));
  const auto seq = make_instance(T, d);
  dpol::SvtExpertsConfig cfg;
  cfg.horizon = T;
  cfg.experts = d;
  cfg.beta = 0.05;
  cfg.budget = dpol::PrivacyBudget::pure(1.0);
  size_t rep = 0;
  for (auto _ : state) {
    dpol::RngStream rng(12, rep++);
    auto result = run_svt_zero_loss(seq, cfg, rng);
    benchmark::DoNotOptimize(result.second.regret);
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_SvtZeroLoss)->Args({2000, 64})->Args({20000, 256});

void BM_Potential(benchmark::State& state) {
  const size_t T = static_cast<size_t>(state.range(0));
  const size_t d = static_cast<size_t>(state.range(1));
  const auto seq = make_instance(T, d);
  dpol::PotentialConfig cfg;
  cfg.horizon = T;
  cfg.experts = d;
  cfg.gamma = 1.0 / static_cast<double>(d);
  cfg.budget = dpol::PrivacyBudget::pure(1.0);
  size_t rep = 0;
  for (auto _ : state) {
    dpol::RngStream rng(13, rep++);
    auto result = run_potential(seq, cfg, rng);
    benchmark::DoNotOptimize(result.report.regret);
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_Potential)->Args({2000, 16})->Args({2000, 256});

void BM_Dartboard(benchmark::State& state) {
  const size_t T = static_cast<size_t>(state.range(0));
  const size_t d = static_cast<size_t>(state.range(1));
  const auto seq = make_instance(T, d);
  const auto cfg = dpol::DartboardConfig::cor_pure(T, d, 1.0);
  size_t rep = 0;
  for (auto _ : state) {
    dpol::RngStream rng(14, rep++);
    auto result = run_dartboard(seq, cfg, rng);
    benchmark::DoNotOptimize(result.second.regret);
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_Dartboard)->Args({10000, 16})->Args({10000, 256});

void BM_DpFtrl(benchmark::State& state) {
  const size_t T = static_cast<size_t>(state.range(0));
  const dpol::BallDomain dom{5, 1.0};
  std::vector<dpol::ConvexLoss> losses(
      T, dpol::ConvexLoss::quadratic({0.2, -0.1, 0.3, 0.0, 0.4}, 1.0));
  dpol::DpFtrlConfig cfg;
  cfg.budget = {1.0, 1e-6};
  size_t rep = 0;
  for (auto _ : state) {
    dpol::RngStream rng(15, rep++);
    auto result = run_dp_ftrl(losses, dom, cfg, rng);
    benchmark::DoNotOptimize(result.report.regret);
  }
  state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_DpFtrl)->Arg(1000)->Arg(10000);

}  // namespace

#include "dpol/svt_experts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpol/errors.hpp"

namespace dpol {

namespace {

size_t ceil_log2_size(size_t n) {
  size_t levels = 0;
  size_t cap = 1;
  while (cap < n) {
    cap <<= 1;
    ++levels;
  }
  return levels;
}

double switch_budget_real(size_t experts, double beta) {
  const double ceil_ln_d = std::ceil(std::log(static_cast<double>(experts)));
  return 6.0 * ceil_ln_d + 24.0 * std::log(1.0 / beta);
}

}  // namespace

size_t SvtExpertsConfig::switch_budget() const {
  return static_cast<size_t>(std::ceil(switch_budget_real(experts, beta)));
}

double SvtExpertsConfig::eta() const {
  const double k = static_cast<double>(switch_budget());
  if (variant == Variant::kPure) return budget.epsilon / (2.0 * k);
  return budget.epsilon / std::sqrt(32.0 * k * std::log(1.0 / budget.delta));
}

double SvtExpertsConfig::query_log_bound() const {
  const double t = static_cast<double>(horizon);
  return std::log(2.0 * t * t / beta);
}

double SvtExpertsConfig::threshold() const {
  if (threshold_override) return *threshold_override;
  return l_star_bound + 4.0 / eta() + 8.0 * query_log_bound() / budget.epsilon;
}

void SvtExpertsConfig::validate() const {
  if (horizon == 0 || experts == 0)
    throw ParameterError("SvtExpertsConfig: horizon and experts must be positive");
  if (!(beta > 0.0) || !(beta < 1.0))
    throw ParameterError("SvtExpertsConfig: beta must lie in (0,1)");
  budget.validate();
  if (l_star_bound < 0.0)
    throw ParameterError("SvtExpertsConfig: L* bound must be nonnegative");
  if (variant == Variant::kApprox) {
    if (!(budget.delta > 0.0))
      throw ParameterError("SvtExpertsConfig: approx variant requires delta > 0");
    const double cap = std::sqrt(std::log(static_cast<double>(horizon)) *
                                 std::log(1.0 / budget.delta));
    if (budget.epsilon > cap)
      throw ParameterError(
          "SvtExpertsConfig: approx variant requires eps <= sqrt(ln T ln(1/delta))");
  }
  if (initial_expert && *initial_expert >= experts)
    throw ParameterError("SvtExpertsConfig: initial expert out of range");
}

std::pair<AlgorithmTrace, RegretReport> run_svt_zero_loss(
    const LossSequence& seq, const SvtExpertsConfig& cfg, RngStream& rng) {
  cfg.validate();
  if (seq.horizon() != cfg.horizon || seq.experts() != cfg.experts)
    throw ParameterError("run_svt_zero_loss: config does not match sequence");

  const size_t T = cfg.horizon;
  const size_t d = cfg.experts;
  const size_t K = cfg.switch_budget();
  const double eta = cfg.eta();
  const double L = cfg.threshold();
  const double session_eps = cfg.budget.epsilon / 2.0;

  AlgorithmTrace trace;
  trace.rows.reserve(T);
  trace.configured = cfg.budget;

  std::vector<double> cum(d, 0.0);
  size_t x = cfg.initial_expert ? *cfg.initial_expert : rng.uniform_index(d);
  size_t k = 0;
  double seg_baseline = 0.0;  // cum[x] at the current segment start

  auto pay = [&](size_t r, bool switched) {
    trace.rows.push_back({static_cast<uint32_t>(r + 1), static_cast<int32_t>(x),
                          seq.loss(r, x), switched, static_cast<uint32_t>(k)});
    const auto row = seq.row(r);
    for (size_t i = 0; i < d; ++i) cum[i] += row[i];
  };

  size_t r = 0;
  while (r < T) {
    if (k >= K) {
      pay(r, false);
      ++r;
      continue;
    }
    AboveThresholdSession session(session_eps, L, cfg.beta / static_cast<double>(T),
                                  T, rng, cfg.oracle_mode);
    trace.add_event(static_cast<uint32_t>(r + 1), "session_open");
    bool halted = false;
    while (r < T) {
      const double q = cum[x] - seg_baseline;
      if (session.add_query(q, rng) == QueryOutcome::kHalted) {
        halted = true;
        break;
      }
      pay(r, false);
      ++r;
    }
    if (!halted) break;
    // Resample before paying the halting round: scores max(cumloss, L*).
    std::vector<double> scores(d);
    for (size_t i = 0; i < d; ++i) scores[i] = std::max(cum[i], cfg.l_star_bound);
    x = sample_exponential_mechanism(rng, scores, eta, cfg.oracle_mode);
    ++k;
    trace.add_event(static_cast<uint32_t>(r + 1), "switch");
    seg_baseline = cum[x];
    pay(r, true);
    ++r;
  }

  trace.ledger.add("exponential_mechanism", eta, 0.0, K);
  trace.ledger.add("above_threshold", session_eps, 0.0, 1);
  if (cfg.variant == SvtExpertsConfig::Variant::kPure) {
    trace.spent = compose_basic(trace.ledger);
  } else {
    const PrivacyBudget mech = compose_advanced(eta, 0.0, K, cfg.budget.delta);
    trace.spent = {session_eps + mech.epsilon, mech.delta};
  }

  RegretReport report = score_run(seq, trace);
  return {std::move(trace), std::move(report)};
}

AdaptiveRunResult run_svt_adaptive(const LossSequence& seq, size_t horizon,
                                   size_t experts, double beta,
                                   const PrivacyBudget& budget, RngStream& rng,
                                   bool oracle_mode) {
  if (horizon < 2) throw ParameterError("run_svt_adaptive: horizon must be >= 2");
  if (seq.horizon() != horizon || seq.experts() != experts)
    throw ParameterError("run_svt_adaptive: config does not match sequence");
  if (!(beta > 0.0) || !(beta < 1.0))
    throw ParameterError("run_svt_adaptive: beta must lie in (0,1)");
  budget.validate();

  const size_t T = horizon;
  const size_t d = experts;
  const size_t phase_cap = std::max<size_t>(1, ceil_log2_size(T));
  const double eps0 = budget.epsilon / (2.0 * static_cast<double>(phase_cap));
  const double beta0 = beta / static_cast<double>(T);
  const size_t K =
      static_cast<size_t>(std::ceil(switch_budget_real(d, beta0)));
  const double eta = eps0 / (2.0 * static_cast<double>(K));
  const double B = std::log(2.0 * static_cast<double>(T) * static_cast<double>(T) / beta0);
  const double doubling_margin =
      5.0 * static_cast<double>(K) * std::log(1.0 / beta0) / eps0;
  const double laplace_scale = static_cast<double>(K) / eps0;

  AlgorithmTrace trace;
  trace.rows.reserve(T);
  trace.configured = budget;

  double l_bar = 1.0;
  size_t phases = 1;
  size_t laplace_uses = 0;

  std::vector<double> cum(d, 0.0);
  size_t x = rng.uniform_index(d);
  size_t k = 0;
  double seg_baseline = 0.0;
  double threshold = l_bar + 4.0 / eta + 8.0 * B / eps0;

  auto pay = [&](size_t r, bool switched) {
    trace.rows.push_back({static_cast<uint32_t>(r + 1), static_cast<int32_t>(x),
                          seq.loss(r, x), switched,
                          static_cast<uint32_t>(phases)});
    const auto row = seq.row(r);
    for (size_t i = 0; i < d; ++i) cum[i] += row[i];
  };

  size_t r = 0;
  trace.add_event(1, "phase_start");
  while (r < T) {
    if (k >= K) {
      pay(r, false);
      ++r;
      continue;
    }
    AboveThresholdSession session(eps0 / 2.0, threshold,
                                  beta0 / static_cast<double>(T), T, rng,
                                  oracle_mode);
    bool halted = false;
    while (r < T) {
      const double q = cum[x] - seg_baseline;
      if (session.add_query(q, rng) == QueryOutcome::kHalted) {
        halted = true;
        break;
      }
      pay(r, false);
      ++r;
    }
    if (!halted) break;
    std::vector<double> scores(d);
    for (size_t i = 0; i < d; ++i) scores[i] = std::max(cum[i], l_bar);
    x = sample_exponential_mechanism(rng, scores, eta, oracle_mode);

    // Laplace check of the fresh expert's cumulative loss drives the doubling.
    const double l_hat =
        cum[x] + (oracle_mode ? 0.0 : rng.laplace(laplace_scale));
    ++laplace_uses;
    if (phases < phase_cap && l_hat > l_bar - doubling_margin) {
      l_bar *= 2.0;
      ++phases;
      threshold = l_bar + 4.0 / eta + 8.0 * B / eps0;
      x = rng.uniform_index(d);  // fresh inner start
      k = 0;
      trace.add_event(static_cast<uint32_t>(r + 1), "phase_start");
      trace.add_event(static_cast<uint32_t>(r + 1), "double");
    } else {
      ++k;
      trace.add_event(static_cast<uint32_t>(r + 1), "switch");
    }
    seg_baseline = cum[x];
    pay(r, true);
    ++r;
  }

  trace.ledger.add("above_threshold", eps0 / 2.0, 0.0, phases);
  trace.ledger.add("exponential_mechanism", eta, 0.0,
                   static_cast<uint64_t>(K) * phases);
  if (laplace_uses > 0)
    trace.ledger.add("laplace_estimate", eps0 / static_cast<double>(K), 0.0,
                     laplace_uses);
  trace.spent = compose_basic(trace.ledger);

  AdaptiveRunResult result{std::move(trace), {}, l_bar, phases};
  result.report = score_run(seq, result.trace);
  return result;
}

size_t BintreeExpertsConfig::phase_cap() const {
  return ceil_log2_size(experts) + 10;
}

double BintreeExpertsConfig::tau_or_default() const {
  if (tau > 0.0) return tau;
  const double dt = static_cast<double>(experts) * static_cast<double>(horizon);
  return 16.0 * std::log(dt) * std::log(static_cast<double>(horizon)) /
         budget.epsilon;
}

void BintreeExpertsConfig::validate() const {
  if (horizon == 0 || experts == 0)
    throw ParameterError("BintreeExpertsConfig: horizon and experts must be positive");
  if (b_good == 0 || b_good > experts)
    throw ParameterError("BintreeExpertsConfig: b_good must lie in [1, d]");
  budget.validate();
}

std::pair<AlgorithmTrace, RegretReport> run_bintree_experts(
    const LossSequence& seq, const BintreeExpertsConfig& cfg, RngStream& rng) {
  cfg.validate();
  if (seq.horizon() != cfg.horizon || seq.experts() != cfg.experts)
    throw ParameterError("run_bintree_experts: config does not match sequence");

  const size_t T = cfg.horizon;
  const size_t d = cfg.experts;
  const double tau = cfg.tau_or_default();
  const size_t phase_cap = cfg.phase_cap();
  const double eps_phase = cfg.budget.epsilon / static_cast<double>(phase_cap);
  const double eta_sel = eps_phase / (2.0 * static_cast<double>(cfg.b_good));
  const double eps_tree = eps_phase / (2.0 * static_cast<double>(cfg.b_good));

  AlgorithmTrace trace;
  trace.rows.reserve(T);
  trace.configured = cfg.budget;

  std::vector<double> cum(d, 0.0);
  std::vector<bool> used(d, false);
  size_t used_count = 0;
  size_t phases = 0;
  size_t selections = 0;

  int32_t prev_expert = -1;
  auto pay = [&](size_t r, size_t x) {
    const bool switched = prev_expert != static_cast<int32_t>(x);
    prev_expert = static_cast<int32_t>(x);
    trace.rows.push_back({static_cast<uint32_t>(r + 1), static_cast<int32_t>(x),
                          seq.loss(r, x), switched,
                          static_cast<uint32_t>(phases)});
    const auto row = seq.row(r);
    for (size_t i = 0; i < d; ++i) cum[i] += row[i];
  };

  size_t r = 0;
  bool frozen = false;
  size_t frozen_expert = 0;
  std::vector<size_t> selected;
  std::vector<double> estimates;
  std::vector<BinaryTreeCounter> trees;

  while (r < T) {
    if (frozen) {
      pay(r, frozen_expert);
      ++r;
      continue;
    }
    const bool need_phase =
        trees.empty() ||
        *std::min_element(estimates.begin(), estimates.end()) >= tau;
    if (need_phase) {
      if (phases >= phase_cap || used_count >= d) {
        // Out of budget or experts: keep playing the best current estimate.
        frozen = true;
        frozen_expert = selected.empty()
                            ? 0
                            : selected[std::min_element(estimates.begin(),
                                                        estimates.end()) -
                                       estimates.begin()];
        trace.add_event(static_cast<uint32_t>(r + 1), "freeze");
        continue;
      }
      ++phases;
      trace.add_event(static_cast<uint32_t>(r + 1), "phase_start");
      selected.clear();
      estimates.clear();
      trees.clear();
      const size_t want = std::min(cfg.b_good, d - used_count);
      for (size_t pick = 0; pick < want; ++pick) {
        std::vector<size_t> pool;
        std::vector<double> scores;
        for (size_t i = 0; i < d; ++i)
          if (!used[i]) {
            pool.push_back(i);
            scores.push_back(cum[i]);
          }
        const size_t at =
            sample_exponential_mechanism(rng, scores, eta_sel, cfg.oracle_mode);
        const size_t chosen = pool[at];
        used[chosen] = true;
        ++used_count;
        ++selections;
        selected.push_back(chosen);
      }
      for (size_t i = 0; i < selected.size(); ++i) {
        trees.emplace_back(T - r, PrivacyBudget::pure(eps_tree), 1.0,
                           cfg.oracle_mode);
        estimates.push_back(0.0);
      }
      continue;
    }
    // Play the tracked argmin (lowest index on ties), then feed every tree.
    size_t best = 0;
    for (size_t i = 1; i < selected.size(); ++i) {
      if (estimates[i] < estimates[best] ||
          (estimates[i] == estimates[best] && selected[i] < selected[best]))
        best = i;
    }
    pay(r, selected[best]);
    for (size_t i = 0; i < selected.size(); ++i)
      estimates[i] = trees[i].feed(seq.loss(r, selected[i]), rng);
    ++r;
  }

  if (selections > 0)
    trace.ledger.add("exponential_mechanism", eta_sel, 0.0, selections);
  trace.ledger.add("binary_tree", eps_tree, 0.0,
                   static_cast<uint64_t>(cfg.b_good) * std::max<size_t>(phases, 1));
  trace.spent = compose_basic(trace.ledger);

  RegretReport report = score_run(seq, trace);
  return {std::move(trace), std::move(report)};
}

}  // namespace dpol

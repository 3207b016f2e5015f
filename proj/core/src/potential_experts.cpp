#include "dpol/potential_experts.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dpol/errors.hpp"
#include "dpol/mechanisms.hpp"

namespace dpol {

namespace {

double log_sum_exp(std::span<const double> vals) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : vals) m = std::max(m, v);
  double s = 0.0;
  for (double v : vals) s += std::exp(v - m);
  return m + std::log(s);
}

double solve_approx_phase_epsilon(double target_eps, size_t k, double delta) {
  // Largest per-phase epsilon whose advanced composition over k phases at
  // delta' = delta stays within target_eps. Monotone; bisect.
  double lo = 0.0, hi = target_eps;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double total = compose_advanced(mid, 0.0, k, delta).epsilon;
    (total > target_eps ? hi : lo) = mid;
  }
  return lo;
}

}  // namespace

size_t PotentialConfig::switch_budget() const {
  return static_cast<size_t>(std::ceil(2.0 * std::log(1.0 / gamma)));
}

double PotentialConfig::beta_or_default() const {
  if (beta > 0.0) return beta;
  const double t = static_cast<double>(horizon);
  return 1.0 / (t * t);
}

double PotentialConfig::phase_epsilon() const {
  const size_t k = switch_budget();
  if (variant == Variant::kPure)
    return budget.epsilon / static_cast<double>(k);
  return solve_approx_phase_epsilon(budget.epsilon, k, budget.delta);
}

double PotentialConfig::eps0() const {
  const double c = 56.0 * std::log(static_cast<double>(horizon));
  return phase_epsilon() * c / (c + 1.0);
}

double PotentialConfig::eta() const {
  return eps0() / (56.0 * std::log(static_cast<double>(horizon)));
}

void PotentialConfig::validate() const {
  if (horizon < 2 || experts == 0)
    throw ParameterError("PotentialConfig: need horizon >= 2 and experts >= 1");
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw ParameterError("PotentialConfig: gamma must lie in (0,1)");
  if (!(alpha > 0.0)) throw ParameterError("PotentialConfig: alpha must be positive");
  budget.validate();
  if (variant == Variant::kApprox && !(budget.delta > 0.0))
    throw ParameterError("PotentialConfig: approx variant requires delta > 0");
  const double b = beta_or_default();
  if (!(b > 0.0) || !(b < 1.0))
    throw ParameterError("PotentialConfig: beta must lie in (0,1)");
  const double e = eta();
  if (!(e > 0.0) || e >= 0.5)
    throw ParameterError("PotentialConfig: derived eta outside (0, 1/2)");
  const double t = static_cast<double>(horizon);
  const double needed = 8.0 * e * (std::log(t) + std::log(2.0 * t / b)) / eps0();
  if (alpha < needed) {
    std::ostringstream msg;
    msg << "PotentialConfig: alpha condition violated: alpha=" << alpha
        << " < 8*eta*(ln T + ln(2T/beta))/eps0=" << needed;
    throw ConfigError(msg.str());
  }
}

double log_potential(std::span<const double> cumulative, double eta) {
  std::vector<double> logw(cumulative.size());
  for (size_t i = 0; i < cumulative.size(); ++i) logw[i] = -eta * cumulative[i];
  return log_sum_exp(logw) - std::log(static_cast<double>(cumulative.size()));
}

std::vector<double> exponential_weight_probs(std::span<const double> cumulative,
                                             double eta) {
  std::vector<double> probs(cumulative.size());
  double m = -std::numeric_limits<double>::infinity();
  for (double c : cumulative) m = std::max(m, -eta * c);
  double z = 0.0;
  for (size_t i = 0; i < cumulative.size(); ++i) {
    probs[i] = std::exp(-eta * cumulative[i] - m);
    z += probs[i];
  }
  for (double& p : probs) p /= z;
  return probs;
}

PotentialRunResult run_potential(const LossSequence& seq,
                                 const PotentialConfig& cfg, RngStream& rng) {
  cfg.validate();
  if (seq.horizon() != cfg.horizon || seq.experts() != cfg.experts)
    throw ParameterError("run_potential: config does not match sequence");

  const size_t T = cfg.horizon;
  const size_t d = cfg.experts;
  const size_t K = cfg.switch_budget();
  const double eta = cfg.eta();
  const double eps0 = cfg.eps0();
  const double beta = cfg.beta_or_default();
  // Session threshold in query units; q >= 2 alpha / eta means the
  // log-potential dropped by 2 alpha since the last resample.
  const double threshold_q = 2.0 * cfg.alpha / eta;

  PotentialRunResult out;
  AlgorithmTrace& trace = out.trace;
  trace.rows.reserve(T);
  trace.configured = cfg.budget;
  auto& log_phi_col = trace.add_column("log_phi");

  // The regret claim is gated on L*(gamma) <= ln^2(1/gamma) ln(T) / eps; the
  // gamma-quantile of the committed column sums decides the label.
  {
    auto sums = seq.column_sums();
    std::sort(sums.begin(), sums.end());
    const size_t idx = static_cast<size_t>(
        std::ceil(cfg.gamma * static_cast<double>(d)));
    const double l_star_gamma = sums[idx == 0 ? 0 : idx - 1];
    const double gate = std::log(1.0 / cfg.gamma) * std::log(1.0 / cfg.gamma) *
                        std::log(static_cast<double>(T)) / cfg.budget.epsilon;
    if (l_star_gamma > gate) trace.add_event(0, "out_of_hypothesis");
  }

  std::vector<double> cum(d, 0.0);
  double log_phi = 0.0;  // ln phi(0) = 0 under the uniform measure
  double snapshot = log_phi;
  out.snapshots.push_back(snapshot);

  size_t x = cfg.initial_expert ? *cfg.initial_expert : rng.uniform_index(d);
  size_t k = 0;

  auto pay = [&](size_t r, bool switched) {
    trace.rows.push_back({static_cast<uint32_t>(r + 1), static_cast<int32_t>(x),
                          seq.loss(r, x), switched, static_cast<uint32_t>(k)});
    const auto row = seq.row(r);
    for (size_t i = 0; i < d; ++i) cum[i] += row[i];
    log_phi = log_potential(cum, eta);
    log_phi_col.push_back(log_phi);
  };

  size_t r = 0;
  while (r < T) {
    if (k >= K) {
      pay(r, false);
      ++r;
      continue;
    }
    AboveThresholdSession session(eps0, threshold_q,
                                  beta / static_cast<double>(T), T, rng,
                                  cfg.oracle_mode);
    trace.add_event(static_cast<uint32_t>(r + 1), "session_open");
    bool halted = false;
    while (r < T) {
      const double q = (snapshot - log_phi) / eta;
      if (session.add_query(q, rng) == QueryOutcome::kHalted) {
        halted = true;
        break;
      }
      pay(r, false);
      ++r;
    }
    if (!halted) break;
    // Resample from the exponential weights over cumulative losses; the
    // snapshot t*(k) = t-1 is the potential before this round's loss.
    x = sample_exponential_mechanism(rng, cum, 2.0 * eta, cfg.oracle_mode);
    ++k;
    snapshot = log_phi;
    out.snapshots.push_back(snapshot);
    trace.add_event(static_cast<uint32_t>(r + 1), "switch");
    pay(r, true);
    ++r;
  }

  out.switches = k;
  trace.ledger.add("phase", cfg.phase_epsilon(), 0.0, K);
  if (cfg.variant == PotentialConfig::Variant::kPure) {
    trace.spent = compose_basic(trace.ledger);
  } else {
    trace.spent = compose_advanced(cfg.phase_epsilon(), 0.0, K, cfg.budget.delta);
  }
  out.report = score_run(seq, trace);
  return out;
}

double potential_query_sensitivity_check(const LossSequence& seq,
                                         size_t perturbed_round,
                                         std::span<const double> perturbed_row,
                                         double eta) {
  if (perturbed_round >= seq.horizon())
    throw ParameterError("potential_query_sensitivity_check: round out of range");
  if (perturbed_row.size() != seq.experts())
    throw ParameterError("potential_query_sensitivity_check: row size mismatch");
  for (double v : perturbed_row)
    if (!(v >= 0.0 && v <= 1.0))
      throw ParameterError("potential_query_sensitivity_check: entry outside [0,1]");

  const size_t d = seq.experts();
  std::vector<double> cum(d, 0.0), cum_pert(d, 0.0);
  double max_delta = 0.0;
  for (size_t t = 0; t < seq.horizon(); ++t) {
    const auto row = seq.row(t);
    for (size_t i = 0; i < d; ++i) {
      cum[i] += row[i];
      cum_pert[i] += (t == perturbed_round) ? perturbed_row[i] : row[i];
    }
    const double delta =
        std::fabs(log_potential(cum, eta) - log_potential(cum_pert, eta)) / eta;
    max_delta = std::max(max_delta, delta);
  }
  return max_delta;
}

}  // namespace dpol

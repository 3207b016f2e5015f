#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "dpol/experts_env.hpp"
#include "dpol/privacy.hpp"

namespace dpol {

/// Parameters for the log-potential sparse-vector algorithm over a finite
/// expert set under the uniform measure. The potential is
/// phi_eta(t) = (1/d) sum_x exp(-eta * cumloss_t(x)), kept in log space.
struct PotentialConfig {
  size_t horizon = 0;
  size_t experts = 0;
  double gamma = 0.0;   // mass parameter; K = ceil(2 ln(1/gamma))
  double beta = 0.0;    // failure probability; 0 = default 1/T^2
  double alpha = 1.0;   // potential-drop unit; session threshold is 2*alpha/eta
  PrivacyBudget budget;

  enum class Variant { kPure, kApprox };
  Variant variant = Variant::kPure;

  bool oracle_mode = false;
  std::optional<size_t> initial_expert;

  size_t switch_budget() const;  // K
  double beta_or_default() const;
  /// Per-phase (eta + eps0) total, normalized so the composed run budget is
  /// exactly the configured epsilon (basic composition for pure, advanced for
  /// approx at delta' = delta).
  double phase_epsilon() const;
  double eps0() const;  // phase_epsilon * 56 lnT / (56 lnT + 1)
  double eta() const;   // eps0 / (56 ln T)

  /// Throws ConfigError when alpha < 8 eta (ln T + ln(2T/beta)) / eps0,
  /// reporting the violated inequality.
  void validate() const;
};

struct PotentialRunResult {
  AlgorithmTrace trace;  // extra column log_phi (value after each round)
  RegretReport report;
  size_t switches = 0;
  /// Log-potential snapshots at t*(0)=start and at each resample.
  std::vector<double> snapshots;
};

PotentialRunResult run_potential(const LossSequence& seq,
                                 const PotentialConfig& cfg, RngStream& rng);

/// Max over rounds of |delta q_t| between `seq` and the same sequence with one
/// row replaced, where q_t = (1/eta)(ln phi(a) - ln phi(t)) for any snapshot a
/// preceding the perturbed round. The sandwich inequality bounds this by 1.
double potential_query_sensitivity_check(const LossSequence& seq,
                                         size_t perturbed_round,
                                         std::span<const double> perturbed_row,
                                         double eta);

/// Exponential-weight probabilities e^{-eta cum_x} / sum, computed in log
/// space; the resampling distribution of the algorithm.
std::vector<double> exponential_weight_probs(std::span<const double> cumulative,
                                             double eta);

/// ln phi_eta(t) = ln((1/d) sum_x e^{-eta cum_x}), max-shifted.
double log_potential(std::span<const double> cumulative, double eta);

}  // namespace dpol

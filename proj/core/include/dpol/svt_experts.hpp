#pragma once

#include <optional>
#include <utility>

#include "dpol/experts_env.hpp"
#include "dpol/mechanisms.hpp"
#include "dpol/privacy.hpp"

namespace dpol {

/// Parameters for the sparse-vector expert switcher. Derived quantities use
/// natural logarithms; K is rounded up to an integer and eta uses the rounded
/// K so the composed budget is exactly the configured epsilon.
struct SvtExpertsConfig {
  size_t horizon = 0;
  size_t experts = 0;
  double beta = 0.05;
  PrivacyBudget budget;
  double l_star_bound = 0.0;

  enum class Variant { kPure, kApprox };
  Variant variant = Variant::kPure;

  bool oracle_mode = false;
  std::optional<size_t> initial_expert;      // test hook; uniform draw when unset
  std::optional<double> threshold_override;  // test hook; replaces the derived L

  /// K = ceil(6 ceil(ln d) + 24 ln(1/beta)).
  size_t switch_budget() const;
  /// Pure: eps/(2K). Approx: eps / sqrt(32 K ln(1/delta)).
  double eta() const;
  /// B = ln(2 T^2 / beta).
  double query_log_bound() const;
  /// Threshold L = L* + 4/eta + 8B/eps.
  double threshold() const;

  void validate() const;
};

/// Sparse-vector switching over a zero/low-loss expert set: uniform start;
/// AboveThreshold on the running loss since the last switch; on halt (and
/// below the switch budget) resample from the exponential mechanism with
/// scores max(cumulative loss, L*). The halting round is paid by the freshly
/// sampled expert, one loss per global round.
std::pair<AlgorithmTrace, RegretReport> run_svt_zero_loss(
    const LossSequence& seq, const SvtExpertsConfig& cfg, RngStream& rng);

struct AdaptiveRunResult {
  AlgorithmTrace trace;
  RegretReport report;
  double final_loss_estimate = 0.0;  // last value of the doubling estimate
  size_t phases = 0;                 // inner invocations, capped at ceil(log2 T)
};

/// Doubling wrapper: runs the zero-loss switcher with per-phase budget
/// eps0 = eps / (2 ceil(log2 T)); at each resample a Laplace estimate of the
/// new expert's cumulative loss decides whether to double the loss estimate
/// and restart the inner algorithm. Phase count is capped at ceil(log2 T).
AdaptiveRunResult run_svt_adaptive(const LossSequence& seq, size_t horizon,
                                   size_t experts, double beta,
                                   const PrivacyBudget& budget, RngStream& rng,
                                   bool oracle_mode = false);

struct BintreeExpertsConfig {
  size_t horizon = 0;
  size_t experts = 0;
  size_t b_good = 1;  // experts tracked per phase
  double tau = 0.0;   // phase-exit estimate level; 0 = default 16 ln(dT) ln(T)/eps
  PrivacyBudget budget;
  bool oracle_mode = false;

  size_t phase_cap() const;  // ceil(log2 d) + 10
  double tau_or_default() const;
  void validate() const;
};

/// Phased variant: the exponential mechanism selects b_good experts without
/// replacement across phases, a per-expert binary tree tracks running losses,
/// the round's play is the tracked argmin, and a new phase starts once every
/// tracked estimate has reached tau. Freezes on the best current estimate when
/// experts or phase budget run out.
std::pair<AlgorithmTrace, RegretReport> run_bintree_experts(
    const LossSequence& seq, const BintreeExpertsConfig& cfg, RngStream& rng);

}  // namespace dpol

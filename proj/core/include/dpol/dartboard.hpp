#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "dpol/experts_env.hpp"
#include "dpol/privacy.hpp"

namespace dpol {

/// Private shrinking dartboard parameters. The privacy identity is computed
/// from (eta, p, T, delta, B); the corollary constructors derive (eta, p, B)
/// from a target budget.
struct DartboardConfig {
  size_t horizon = 0;
  size_t experts = 0;
  double eta = 0.0;  // step size, in (0, 1/2)
  double p = 0.0;    // forced-switch probability, in (0, 1/2)
  size_t batch = 1;  // B >= 1
  PrivacyBudget budget;            // configured target
  bool unlimited_switches = false; // oracle runs ignore the switch budget

  /// K = ceil(4 T p) for B = 1, ceil(4 T p / B) otherwise.
  size_t switch_budget() const;

  /// Composed epsilon of this parameterization:
  ///   delta > 0, B = 1: 5 eta/p + 100 T p eta^2 + 20 eta sqrt(T p ln(1/delta))
  ///   delta = 0, B = 1: eta/p + 16 T p eta
  ///   B > 1:            5 eta/(Bp) + 100 T p eta^2/B^3
  ///                     + (20 eta / B) sqrt(12 T p/B ln(1/delta))
  double privacy_epsilon() const;

  static DartboardConfig manual(size_t horizon, size_t experts, double eta,
                                double p, double delta, size_t batch = 1);
  /// p = 1/sqrt(T), eta = p eps / 20; pure DP.
  static DartboardConfig cor_pure(size_t horizon, size_t experts, double eps);
  /// eps0 = min(eps/2, ln^{1/3}(1/delta) T^{-1/6} sqrt(ln d)),
  /// p = (T ln(1/delta))^{-1/3}, eta = p eps0 / 20.
  static DartboardConfig cor_appr(size_t horizon, size_t experts, double eps,
                                  double delta);
  /// B = ln^{2/5}(1/delta) ln^{3/5}(d) / (T^{1/5} eps^{3/5}) rounded to >= 1,
  /// p = (B/(T ln(1/delta)))^{1/3}, eta = B p eps / 40.
  static DartboardConfig cor_batch(size_t horizon, size_t experts, double eps,
                                   double delta);

  void validate() const;
};

/// Lazy multiplicative weights: per round the weights shrink by
/// (1-eta)^loss, a Ber(1-p) draw optionally chains into a Ber(w_t/w_{t-1})
/// redraw, and only a double failure (within the switch budget) resamples
/// from the normalized weights. Trace extras: z1, z2 (-1 when not drawn),
/// resampled.
std::pair<AlgorithmTrace, RegretReport> run_dartboard(const LossSequence& seq,
                                                      const DartboardConfig& cfg,
                                                      RngStream& rng);

/// Batched variant: groups rounds into blocks of B, runs the same chain on
/// averaged losses (final partial block zero-padded, logged), holds the expert
/// constant within each block, and scores against the original rows.
std::pair<AlgorithmTrace, RegretReport> run_dartboard_batched(
    const LossSequence& seq, const DartboardConfig& cfg, RngStream& rng);

/// Exact per-round marginals Q_1..Q_T of the unlimited-switch chain via the
/// recurrence
///   Q_t(x) = p p^t_x + (1-p) r_x Q_{t-1}(x) + (1-p) p^t_x sum_x' Q_{t-1}(x')(1-r_x'),
/// r_x = (1-eta)^{loss_{t-1}(x)}. These equal the multiplicative-weights
/// distribution. Guarded to d*T <= 1e6.
std::vector<std::vector<double>> exact_marginal_oracle(const LossSequence& seq,
                                                       const DartboardConfig& cfg);

/// Multiplicative-weights distribution after t rounds (the oracle's reference).
std::vector<double> multiplicative_weights_distribution(const LossSequence& seq,
                                                        double eta, size_t rounds);

/// Pluggable private stochastic-optimization solver: picks an expert from a
/// window of loss rows under its own (eps, delta) accounting.
class ScoSolver {
 public:
  virtual ~ScoSolver() = default;
  virtual size_t select(const LossSequence& seq, size_t row_begin,
                        size_t row_end, const PrivacyBudget& budget,
                        RngStream& rng) const = 0;
};

/// Exponential mechanism over summed per-expert window losses with
/// eta = budget.epsilon (scores are 1-sensitive).
size_t baseline_sco_selector(const LossSequence& seq, size_t row_begin,
                             size_t row_end, const PrivacyBudget& budget,
                             RngStream& rng, bool oracle_mode = false);

class BaselineScoSelector : public ScoSolver {
 public:
  explicit BaselineScoSelector(bool oracle_mode = false)
      : oracle_mode_(oracle_mode) {}
  size_t select(const LossSequence& seq, size_t row_begin, size_t row_end,
                const PrivacyBudget& budget, RngStream& rng) const override {
    return baseline_sco_selector(seq, row_begin, row_end, budget, rng,
                                 oracle_mode_);
  }

 private:
  bool oracle_mode_;
};

/// Limited-updates reduction: the model changes only at rounds t = 2^l, each
/// update consuming exactly the previous half-window of rows, so every row is
/// used by at most one solver call.
std::pair<AlgorithmTrace, RegretReport> run_stochastic_reduction(
    const LossSequence& seq, const ScoSolver& solver,
    const PrivacyBudget& budget, RngStream& rng);

}  // namespace dpol

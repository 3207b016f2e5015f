#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dpol/rng.hpp"
#include "dpol/trace.hpp"

namespace dpol {

/// Committed T x d loss table with entries in [0,1] (oblivious adversary
/// model: the whole table exists before a run starts). Rounds are 0-based in
/// the API; serialized CSV uses 1-based t.
class LossSequence {
 public:
  LossSequence(size_t horizon, size_t experts);

  size_t horizon() const { return horizon_; }
  size_t experts() const { return experts_; }

  double loss(size_t round, size_t expert) const {
    return data_[round * experts_ + expert];
  }
  void set(size_t round, size_t expert, double value);
  std::span<const double> row(size_t round) const {
    return {data_.data() + round * experts_, experts_};
  }

  std::vector<double> column_sums() const;
  double best_expert_loss() const;
  size_t best_expert() const;

  /// Throws ParameterError if any entry lies outside [0,1].
  void validate() const;

  /// CSV with header t,x0,...,x{d-1}.
  void write_csv(std::ostream& out) const;
  static LossSequence read_csv(std::istream& in);

  /// Compact binary cache (magic + dims + raw doubles).
  void write_binary(std::ostream& out) const;
  static LossSequence read_binary(std::istream& in);

  bool operator==(const LossSequence& other) const = default;

 private:
  size_t horizon_;
  size_t experts_;
  std::vector<double> data_;
};

/// Zero-loss column at `zero_expert`; every other entry Bernoulli(churn).
LossSequence gen_realizable(RngStream& rng, size_t horizon, size_t experts,
                            size_t zero_expert, double churn);

/// A uniformly drawn designated expert whose column sums to exactly
/// `target_loss` (unit losses at uniformly random rounds); all other entries 1.
LossSequence gen_low_loss(RngStream& rng, size_t horizon, size_t experts,
                          size_t target_loss);

/// Oblivious lower-bound construction: j uniform, first T-k rounds all-zero,
/// last k = ceil(ln(d)/(2 eps)) rounds charge 1 to every expert except j.
LossSequence gen_lower_bound_adversary(RngStream& rng, size_t horizon,
                                       size_t experts, double epsilon);

/// i.i.d. rows, losses[t][x] ~ Bernoulli(means[x]).
LossSequence gen_stochastic(RngStream& rng, size_t horizon, size_t experts,
                            std::span<const double> means);

struct RegretReport {
  double cumulative_loss = 0.0;
  double best_expert_loss = 0.0;
  double regret = 0.0;
  size_t switch_count = 0;  // initial pick plus every change of action
  std::vector<PhaseEvent> phase_log;

  /// JSON object with fixed keys: regret, best_loss, switches, phases.
  std::string to_json() const;
};

/// Scores a finished trace against the committed table. The trace must cover
/// exactly the table's horizon.
RegretReport score_run(const LossSequence& seq, const AlgorithmTrace& trace);

}  // namespace dpol

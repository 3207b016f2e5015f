#pragma once

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

#include "dpol/privacy.hpp"
#include "dpol/rng.hpp"

namespace dpol {

/// Laplace(0, scale) draw. scale == 0 returns exactly 0 (deterministic test
/// mode); negative scale is a parameter error.
double sample_laplace(RngStream& rng, double scale);

/// Samples index i with probability proportional to exp(-eta * scores[i] / 2),
/// via Gumbel-max on shifted log-weights. In oracle mode returns the lowest
/// argmin index instead of sampling.
size_t sample_exponential_mechanism(RngStream& rng,
                                    std::span<const double> scores, double eta,
                                    bool oracle_mode = false);

enum class QueryOutcome { kBelow, kHalted };

/// Live AboveThreshold state. Threshold noise is Lap(2/eps0), per-query noise
/// Lap(4/eps0); queries are promised 1-sensitive by the caller. With
/// oracle_mode the session is an exact comparator (halts at the first
/// query >= threshold).
class AboveThresholdSession {
 public:
  AboveThresholdSession(double epsilon0, double threshold, double beta,
                        size_t horizon, RngStream& rng,
                        bool oracle_mode = false);

  /// Feeds the next query value. Returns kHalted when the noisy comparison
  /// exceeds the noisy threshold; the session accepts no queries after that.
  QueryOutcome add_query(double q_value, RngStream& rng);

  bool halted() const { return halted_; }
  size_t queries_seen() const { return queries_seen_; }
  double noisy_threshold() const { return noisy_threshold_; }
  double threshold() const { return threshold_; }
  double epsilon0() const { return epsilon0_; }
  /// Accuracy radius 8(ln T + ln(2/beta))/eps0 for the configured horizon.
  double alpha() const { return alpha_; }

 private:
  double epsilon0_;
  double threshold_;
  double beta_;
  size_t horizon_;
  bool oracle_mode_;
  double noisy_threshold_;
  double alpha_;
  bool halted_ = false;
  size_t queries_seen_ = 0;
};

/// Private running-sum estimator over dyadic interval nodes. Scalar mode adds
/// Laplace(clip * ceil(log2 T) / eps) per node; vector mode adds per-coordinate
/// Gaussian with sigma = clip * sqrt(ceil(log2 T)) * sqrt(2 ln(1.25/delta)) / eps
/// and requires delta > 0. Inputs beyond the clip norm are clipped and counted.
class BinaryTreeCounter {
 public:
  enum class Mode { kScalarLaplace, kVectorGaussian };

  /// Scalar counter.
  BinaryTreeCounter(size_t horizon, PrivacyBudget budget, double clip,
                    bool oracle_mode = false);
  /// Vector counter over `dims` coordinates.
  BinaryTreeCounter(size_t horizon, size_t dims, PrivacyBudget budget,
                    double clip, bool oracle_mode = false);

  double feed(double value, RngStream& rng);
  std::vector<double> feed(std::span<const double> value, RngStream& rng);

  Mode mode() const { return mode_; }
  size_t horizon() const { return horizon_; }
  size_t rounds_fed() const { return rounds_fed_; }
  size_t dims() const { return dims_; }
  /// Number of tree levels, max(1, ceil(log2 T)).
  size_t levels() const { return levels_; }
  double node_scale() const { return node_scale_; }
  size_t last_cover_size() const { return last_cover_size_; }
  size_t max_cover_size() const { return max_cover_size_; }
  size_t clip_events() const { return clip_events_; }

 private:
  struct NodeRef {
    size_t level;
    size_t start;  // 1-based start of the covered interval
  };
  std::vector<NodeRef> dyadic_cover(size_t t) const;
  uint64_t node_key(const NodeRef& n) const {
    return (static_cast<uint64_t>(n.level) << 48) | static_cast<uint64_t>(n.start);
  }

  Mode mode_;
  size_t horizon_;
  size_t dims_;
  PrivacyBudget budget_;
  double clip_;
  bool oracle_mode_;
  size_t levels_;
  double node_scale_;  // Laplace scale or Gaussian sigma per node
  size_t rounds_fed_ = 0;
  size_t last_cover_size_ = 0;
  size_t max_cover_size_ = 0;
  size_t clip_events_ = 0;
  std::vector<double> exact_prefix_;
  std::unordered_map<uint64_t, std::vector<double>> node_noise_;
};

}  // namespace dpol

#include "dpol/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpol/errors.hpp"

namespace dpol {

double sample_laplace(RngStream& rng, double scale) {
  if (scale < 0.0) throw ParameterError("sample_laplace: negative scale");
  return rng.laplace(scale);
}

size_t sample_exponential_mechanism(RngStream& rng,
                                    std::span<const double> scores, double eta,
                                    bool oracle_mode) {
  if (scores.empty())
    throw ParameterError("sample_exponential_mechanism: empty score vector");
  if (!(eta > 0.0))
    throw ParameterError("sample_exponential_mechanism: eta must be positive");
  double min_score = std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (!std::isfinite(s))
      throw ParameterError("sample_exponential_mechanism: non-finite score");
    min_score = std::min(min_score, s);
  }
  if (oracle_mode) {
    for (size_t i = 0; i < scores.size(); ++i)
      if (scores[i] == min_score) return i;
  }
  // Gumbel-max over shifted log-weights -eta (s - min) / 2.
  size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < scores.size(); ++i) {
    const double v = -eta * (scores[i] - min_score) / 2.0 + rng.gumbel();
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  return best;
}

AboveThresholdSession::AboveThresholdSession(double epsilon0, double threshold,
                                             double beta, size_t horizon,
                                             RngStream& rng, bool oracle_mode)
    : epsilon0_(epsilon0),
      threshold_(threshold),
      beta_(beta),
      horizon_(horizon),
      oracle_mode_(oracle_mode) {
  if (!(epsilon0 > 0.0))
    throw ParameterError("AboveThreshold: epsilon0 must be positive");
  if (!(beta > 0.0) || !(beta < 1.0))
    throw ParameterError("AboveThreshold: beta must lie in (0,1)");
  if (horizon == 0) throw ParameterError("AboveThreshold: horizon must be positive");
  alpha_ = 8.0 * (std::log(static_cast<double>(horizon)) + std::log(2.0 / beta_)) /
           epsilon0_;
  noisy_threshold_ =
      threshold_ + (oracle_mode_ ? 0.0 : rng.laplace(2.0 / epsilon0_));
}

QueryOutcome AboveThresholdSession::add_query(double q_value, RngStream& rng) {
  if (halted_) throw StateError("AboveThreshold: query after halt");
  ++queries_seen_;
  const double noisy_q =
      q_value + (oracle_mode_ ? 0.0 : rng.laplace(4.0 / epsilon0_));
  if (noisy_q >= noisy_threshold_) {
    halted_ = true;
    return QueryOutcome::kHalted;
  }
  return QueryOutcome::kBelow;
}

namespace {

size_t ceil_log2(size_t n) {
  size_t levels = 0;
  size_t cap = 1;
  while (cap < n) {
    cap <<= 1;
    ++levels;
  }
  return levels;
}

}  // namespace

BinaryTreeCounter::BinaryTreeCounter(size_t horizon, PrivacyBudget budget,
                                     double clip, bool oracle_mode)
    : mode_(Mode::kScalarLaplace),
      horizon_(horizon),
      dims_(1),
      budget_(budget),
      clip_(clip),
      oracle_mode_(oracle_mode) {
  if (horizon == 0) throw ParameterError("BinaryTreeCounter: horizon must be positive");
  if (!(clip > 0.0)) throw ParameterError("BinaryTreeCounter: clip must be positive");
  budget_.validate();
  levels_ = std::max<size_t>(1, ceil_log2(horizon));
  node_scale_ = clip_ * static_cast<double>(levels_) / budget_.epsilon;
  exact_prefix_.assign(1, 0.0);
}

BinaryTreeCounter::BinaryTreeCounter(size_t horizon, size_t dims,
                                     PrivacyBudget budget, double clip,
                                     bool oracle_mode)
    : mode_(Mode::kVectorGaussian),
      horizon_(horizon),
      dims_(dims),
      budget_(budget),
      clip_(clip),
      oracle_mode_(oracle_mode) {
  if (horizon == 0) throw ParameterError("BinaryTreeCounter: horizon must be positive");
  if (dims == 0) throw ParameterError("BinaryTreeCounter: dims must be positive");
  if (!(clip > 0.0)) throw ParameterError("BinaryTreeCounter: clip must be positive");
  budget_.validate();
  if (!(budget_.delta > 0.0))
    throw ParameterError("BinaryTreeCounter: vector mode requires delta > 0");
  levels_ = std::max<size_t>(1, ceil_log2(horizon));
  node_scale_ = clip_ * std::sqrt(static_cast<double>(levels_)) *
                std::sqrt(2.0 * std::log(1.25 / budget_.delta)) / budget_.epsilon;
  exact_prefix_.assign(dims_, 0.0);
}

std::vector<BinaryTreeCounter::NodeRef> BinaryTreeCounter::dyadic_cover(
    size_t t) const {
  // Decompose [1, t] into aligned dyadic intervals, one per set bit of t.
  std::vector<NodeRef> nodes;
  size_t start = 1;
  size_t rem = t;
  while (rem > 0) {
    size_t level = 0;
    while ((size_t{2} << level) <= rem) ++level;
    const size_t len = size_t{1} << level;
    nodes.push_back({level, start});
    start += len;
    rem -= len;
  }
  return nodes;
}

double BinaryTreeCounter::feed(double value, RngStream& rng) {
  if (mode_ != Mode::kScalarLaplace)
    throw StateError("BinaryTreeCounter: scalar feed on vector counter");
  const double v[1] = {value};
  return feed(std::span<const double>(v, 1), rng)[0];
}

std::vector<double> BinaryTreeCounter::feed(std::span<const double> value,
                                            RngStream& rng) {
  if (rounds_fed_ >= horizon_)
    throw StateError("BinaryTreeCounter: feed past horizon");
  if (value.size() != dims_)
    throw ParameterError("BinaryTreeCounter: dimension mismatch");

  std::vector<double> item(value.begin(), value.end());
  double norm = 0.0;
  if (mode_ == Mode::kScalarLaplace) {
    norm = std::fabs(item[0]);
  } else {
    for (double c : item) norm += c * c;
    norm = std::sqrt(norm);
  }
  if (norm > clip_) {
    const double f = clip_ / norm;
    for (double& c : item) c *= f;
    ++clip_events_;
  }
  for (size_t i = 0; i < dims_; ++i) exact_prefix_[i] += item[i];
  ++rounds_fed_;

  std::vector<double> estimate = exact_prefix_;
  const auto cover = dyadic_cover(rounds_fed_);
  last_cover_size_ = cover.size();
  max_cover_size_ = std::max(max_cover_size_, last_cover_size_);
  for (const auto& node : cover) {
    auto [it, inserted] = node_noise_.try_emplace(node_key(node));
    if (inserted) {
      auto& noise = it->second;
      noise.resize(dims_);
      for (size_t i = 0; i < dims_; ++i) {
        if (oracle_mode_) {
          noise[i] = 0.0;
        } else if (mode_ == Mode::kScalarLaplace) {
          noise[i] = rng.laplace(node_scale_);
        } else {
          noise[i] = rng.gaussian(node_scale_);
        }
      }
    }
    for (size_t i = 0; i < dims_; ++i) estimate[i] += it->second[i];
  }
  return estimate;
}

}  // namespace dpol

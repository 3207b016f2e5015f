#pragma once

#include <cstdint>
#include <cstddef>

namespace dpol {

/// Seedable random stream (xoshiro256++ seeded via splitmix64).
///
/// The same (seed, stream_id) pair reproduces the identical draw sequence
/// bit for bit; distinct stream_ids give statistically independent streams.
/// All transforms (uniform, Laplace, Gaussian, Gumbel) are implemented here
/// rather than through <random> distributions so that sequences are stable
/// across standard libraries.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  explicit RngStream(uint64_t seed, uint64_t stream_id = 0);

  uint64_t seed() const { return seed_; }
  uint64_t stream_id() const { return stream_id_; }

  uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in (0, 1); safe to feed into log().
  double uniform_open();
  double uniform(double lo, double hi);
  /// Uniform index in [0, n). n must be positive.
  size_t uniform_index(size_t n);
  bool bernoulli(double p);

  /// Laplace(0, scale). scale == 0 returns exactly 0; negative scale throws.
  double laplace(double scale);
  /// Gaussian(0, stddev). stddev == 0 returns exactly 0.
  double gaussian(double stddev);
  /// Standard Gumbel draw.
  double gumbel();
  /// Geometric on {1,2,...} with success probability p.
  uint64_t geometric(double p);

 private:
  uint64_t state_[4];
  uint64_t seed_;
  uint64_t stream_id_;
};

}  // namespace dpol

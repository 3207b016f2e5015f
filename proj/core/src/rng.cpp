#include "dpol/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "dpol/errors.hpp"

namespace dpol {

namespace {

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(uint64_t seed, uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  uint64_t sm = seed ^ (0xD2B74407B1CE6E93ULL * (stream_id + 1));
  for (auto& w : state_) w = splitmix64(sm);
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

uint64_t RngStream::next_u64() {
  const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

size_t RngStream::uniform_index(size_t n) {
  if (n == 0) throw ParameterError("uniform_index: n must be positive");
  const uint64_t limit =
      std::numeric_limits<uint64_t>::max() -
      std::numeric_limits<uint64_t>::max() % static_cast<uint64_t>(n);
  uint64_t draw;
  do {
    draw = next_u64();
  } while (draw >= limit);
  return static_cast<size_t>(draw % static_cast<uint64_t>(n));
}

bool RngStream::bernoulli(double p) {
  if (p < 0.0 || p > 1.0) throw ParameterError("bernoulli: p must be in [0,1]");
  return uniform() < p;
}

double RngStream::laplace(double scale) {
  if (scale < 0.0) throw ParameterError("laplace: negative scale");
  if (scale == 0.0) return 0.0;
  const double u = uniform_open() - 0.5;
  const double sign = u < 0.0 ? -1.0 : 1.0;
  return -scale * sign * std::log1p(-2.0 * std::fabs(u));
}

double RngStream::gaussian(double stddev) {
  if (stddev < 0.0) throw ParameterError("gaussian: negative stddev");
  if (stddev == 0.0) return 0.0;
  const double u1 = uniform_open();
  const double u2 = uniform_open();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::gumbel() { return -std::log(-std::log(uniform_open())); }

uint64_t RngStream::geometric(double p) {
  if (p <= 0.0 || p > 1.0) throw ParameterError("geometric: p must be in (0,1]");
  if (p == 1.0) return 1;
  const double u = uniform_open();
  const double draw = std::ceil(std::log(u) / std::log1p(-p));
  return draw < 1.0 ? 1 : static_cast<uint64_t>(draw);
}

}  // namespace dpol

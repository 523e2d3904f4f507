#pragma once

#include <cmath>
#include <cstdint>

namespace wfuse {

/// Deterministic 64-bit generator (splitmix64). Distribution sampling is
/// implemented here rather than with <random> adaptors so that identical
/// seeds give identical streams on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Number of attempts until first success, support {1, 2, ...}.
  std::uint64_t geometric(double p) {
    if (p >= 1.0) return 1;
    // inversion of the geometric CDF; log1p keeps small p accurate
    double u = uniform();
    double k = std::floor(std::log1p(-u) / std::log1p(-p));
    return 1 + static_cast<std::uint64_t>(k);
  }

  /// Standard normal via Box-Muller (no internal cache, two uniforms per draw).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Index in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

/// Stated counter scheme for independent sub-streams: the stream for
/// (seed, index) is Rng(mix(seed, index)), with two scrambling rounds so
/// that neighbouring indices are uncorrelated. Workers drawing from
/// distinct indices never share state.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  Rng first(seed ^ (0x632be59bd9b4e019ULL * (index + 1)));
  Rng second(first.next_u64() + index);
  return second.next_u64();
}

}  // namespace wfuse

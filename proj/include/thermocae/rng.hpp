#pragma once

#include <cstdint>

namespace thermocae {

/// splitmix64 step; also used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for the `index`-th substream of `seed`. Order-independent, so work
/// split across threads draws the same numbers as a serial loop.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// xoshiro256** seeded through splitmix64. Implemented here rather than
/// taken from <random> so streams are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (the spare value is cached).
  double normal();

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace thermocae

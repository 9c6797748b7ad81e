#pragma once

#include <cstdint>
#include <span>

namespace linbpi {

// Deterministic, platform-pinned RNG. std::mt19937_64 would be portable but
// std::uniform_real_distribution is not implementation-defined-free, and the
// whole artifact's reproducibility story rests on the double stream being
// identical everywhere. So: splitmix64 for seeding/derivation, xoshiro256++
// as the core, and every sampling routine written out explicitly.

std::uint64_t splitmix64_next(std::uint64_t& state);

class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform on [0,1): (x >> 11) * 2^-53.
  double uniform01();
  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t uniform_below(std::uint64_t n);
  double uniform(double lo, double hi);
  bool bernoulli(double p);  // true with probability p
  // Index i with probability w[i]/sum(w); cumulative-sum + binary search on a
  // single uniform draw. Weights must be non-negative with positive sum.
  std::size_t categorical(std::span<const double> weights);
  // Same, but the caller supplies the inclusive prefix sums of the weights.
  std::size_t categorical_from_cumulative(std::span<const double> cumulative);
  double exponential();  // rate 1

 private:
  std::uint64_t s_[4];
};

// Per-trial seed derivation: a splitmix64 chain over (master, cell, trial).
// Depends only on the indices, never on scheduling, so any worker count
// reproduces the same streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell,
                          std::uint64_t trial);

}  // namespace linbpi

#include "linbpi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace linbpi {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace

std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += kGolden);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& w : s_) w = splitmix64_next(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n == 0");
  const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x < limit) return x % n;
  }
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

bool Rng::bernoulli(double p) { return uniform01() < p; }

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("categorical: negative weight");
    total += w;
  }
  if (total <= 0.0)
    throw std::invalid_argument("categorical: weights sum to zero");
  double u = uniform01() * total;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

std::size_t Rng::categorical_from_cumulative(
    std::span<const double> cumulative) {
  if (cumulative.empty())
    throw std::invalid_argument("categorical: empty cumulative");
  const double total = cumulative.back();
  if (total <= 0.0)
    throw std::invalid_argument("categorical: cumulative sums to zero");
  const double u = uniform01() * total;
  const auto it =
      std::upper_bound(cumulative.begin(), cumulative.end(), u);
  const std::size_t i = std::size_t(it - cumulative.begin());
  return std::min(i, cumulative.size() - 1);
}

double Rng::exponential() { return -std::log1p(-uniform01()); }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell,
                          std::uint64_t trial) {
  std::uint64_t s = master ^ (kGolden * (cell + 1));
  s = splitmix64_next(s);
  s ^= kGolden * (trial + 1);
  return splitmix64_next(s);
}

}  // namespace linbpi

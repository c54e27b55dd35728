#pragma once

#include <cstdint>
#include <random>

namespace rescav {

using Rng = std::mt19937_64;

// SplitMix64 finaliser; derives independent per-task seeds from (seed, index).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Uniform double in [0, 1) with 53 random bits; independent of the standard
// library's distribution implementation.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

// Standard normal via the polar Marsaglia method, so draws are reproducible
// across standard library implementations.
class NormalSampler {
 public:
  double operator()(Rng& rng);

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rescav

#pragma once

#include <cstdint>
#include <random>

namespace ordcausal {

// SplitMix64 mix step; used as a counter-based seed derivation so replication
// r always gets the same stream no matter which worker runs it.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + 0x9E3779B97F4A7C15ULL * (index + 1));
}

// Thin deterministic wrapper around mt19937_64. Avoids
// std::uniform_real_distribution (implementation-defined sequences) so that
// identical seeds give identical draws on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on the open interval (0,1); 53-bit resolution, never 0 or 1.
  double u01() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  bool bernoulli(double p) { return u01() < p; }

  // Uniform integer in [0, n); modulo bias is negligible for our n.
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }

private:
  std::mt19937_64 eng_;
};

}  // namespace ordcausal

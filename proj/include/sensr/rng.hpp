#ifndef SENSR_RNG_HPP
#define SENSR_RNG_HPP

#include <cstdint>
#include <random>

namespace sensr {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

inline double normal(Rng& rng, double mean = 0.0, double stdev = 1.0) {
  std::normal_distribution<double> d(mean, stdev);
  return d(rng);
}

// Inclusive bounds.
inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  std::uniform_int_distribution<std::size_t> d(lo, hi);
  return d(rng);
}

}  // namespace sensr

#endif

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hslpp {

using Rng = std::mt19937_64;

// Counter-based seed derivation for replica r: splitmix64(seed ^ splitmix64(r + golden)).
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replica);

// Uniform on the open interval (0,1), 53-bit resolution.
inline double uniform01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Geom(alpha): P(k) = alpha^k (1 - alpha), k >= 0; Geom(0) is identically 0.
inline long geometric(Rng& rng, double alpha) {
  if (alpha <= 0.0) return 0;
  return static_cast<long>(std::floor(std::log(uniform01(rng)) / std::log(alpha)));
}

// Same law with the log of alpha precomputed.
inline long geometric_log(Rng& rng, double log_alpha) {
  return static_cast<long>(std::floor(std::log(uniform01(rng)) / log_alpha));
}

double normal(Rng& rng);

}  // namespace hslpp

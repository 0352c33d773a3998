#pragma once

// Portable samplers on top of std::mt19937_64. The standard distributions are
// implementation-defined, so they are avoided wherever a draw has to be
// reproducible across toolchains.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace sven {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent substream identified by a tuple of integers.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (auto p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Standard normal via the Marsaglia polar method (the spare is discarded so
/// every call consumes a self-contained run of the stream).
inline double standard_normal(Rng& rng) {
  for (;;) {
    const double u = 2.0 * uniform01(rng) - 1.0;
    const double v = 2.0 * uniform01(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

/// Gamma(shape, 1) by the Marsaglia-Tsang squeeze method.
inline double standard_gamma(Rng& rng, double shape) {
  if (shape < 1.0) {
    // Boost: G(a) = G(a + 1) * U^(1/a)
    const double g = standard_gamma(rng, shape + 1.0);
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(rng);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

/// Inverse gamma with density proportional to s^(-shape-1) exp(-scale/s).
inline double inverse_gamma(Rng& rng, double shape, double scale) {
  return scale / standard_gamma(rng, shape);
}

}  // namespace sven

#pragma once

#include <cstdint>
#include <random>

#include "mcce/types.hpp"

namespace mcce {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator for (seed, stream, index). Streams partition the
// randomness of one run (channels, noise, shuffling, ...) and index selects a
// record or epoch, so parallel workers never share a generator.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  const std::uint64_t a = splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x8cb92ba72f3d8dd7ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
  return Rng(seq);
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

// CN(0, 1): real and imaginary parts each N(0, 1/2).
inline cplx standard_complex_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 0.70710678118654752440);
  const double re = dist(rng);
  const double im = dist(rng);
  return {re, im};
}

inline double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace mcce

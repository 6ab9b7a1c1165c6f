#pragma once

// Seeded randomness with a fully specified output sequence. std::mt19937_64
// is bit-exact across standard libraries; the distribution helpers here
// replace the std:: distributions, whose outputs are implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

namespace cdrflow {

using Rng = std::mt19937_64;

// Uniform integer in [0, n) by rejection; n must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Standard normal via Box-Muller (one draw per call, the sine branch is dropped).
inline double standard_normal(Rng& rng) {
  double u1;
  do {
    u1 = uniform01(rng);
  } while (u1 <= 0.0);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// FNV-1a, used for cache keys and per-user seed derivation.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for an independent stream keyed by (seed, token, tag).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view token, std::string_view tag) {
  std::uint64_t h = fnv1a(token);
  h = fnv1a("/", h);
  h = fnv1a(tag, h);
  return splitmix64(seed ^ splitmix64(h));
}

}  // namespace cdrflow

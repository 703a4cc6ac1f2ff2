#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "splash/errors.h"

namespace splash::rng {

// All randomness in the library flows through these helpers so that runs are
// reproducible bit-for-bit from a single 64-bit seed, independent of the
// standard library's distribution implementations and of thread scheduling.

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives a child seed from a parent seed and a list of salts.
inline uint64_t derive(uint64_t seed, std::initializer_list<uint64_t> salts) {
  uint64_t s = seed;
  uint64_t out = splitmix64(s);
  for (uint64_t salt : salts) {
    s = out ^ (salt + 0x9e3779b97f4a7c15ull);
    out = splitmix64(s);
  }
  return out;
}

inline std::mt19937_64 make_engine(uint64_t seed,
                                   std::initializer_list<uint64_t> salts = {}) {
  return std::mt19937_64(derive(seed, salts));
}

// Uniform double in [0, 1) with 53 bits of precision.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform unbiased integer in [0, n). Rejection sampling on the top range.
inline uint64_t uniform_below(std::mt19937_64& g, uint64_t n) {
  if (n == 0) throw UsageError("uniform_below: n must be positive");
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = g();
  } while (v >= limit);
  return v % n;
}

// Standard normal via Box-Muller. No caching: consumes two uniforms per call
// so the stream position stays predictable.
inline double gaussian(std::mt19937_64& g) {
  double u1 = uniform01(g);
  while (u1 <= 0.0) u1 = uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793238462643 * u2);
}

// Fisher-Yates shuffle using uniform_below, identical on every platform.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& g) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(uniform_below(g, i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

// Draws an index from an unnormalized weight vector by linear CDF scan.
inline size_t sample_discrete(std::mt19937_64& g,
                              const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw NumericError("sample_discrete: weights must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0) throw NumericError("sample_discrete: zero total weight");
  const double u = uniform01(g) * total;
  double acc = 0.0;
  for (size_t k = 0; k + 1 < weights.size(); ++k) {
    acc += weights[k];
    if (u < acc) return k;
  }
  return weights.size() - 1;
}

}  // namespace splash::rng

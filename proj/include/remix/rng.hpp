#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace remix {

// splitmix64 finalizer. Used to derive independent stream seeds from one
// master seed so that every random consumer (augmentation slot, shuffle,
// model init, ...) gets its own deterministic generator.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream, uint64_t index = 0) {
  return mix64(master ^ mix64(stream + 0x632be59bd9b4e019ull) ^ mix64(index));
}

inline std::mt19937 make_rng(uint64_t master, uint64_t stream, uint64_t index = 0) {
  return std::mt19937(static_cast<uint32_t>(derive_seed(master, stream, index) & 0xffffffffull));
}

// Uniform draw in [0, 1) with 53 random bits. Hand-rolled so the value
// sequence only depends on the mt19937 state, not on a standard library's
// distribution implementation.
inline double uniform_unit(std::mt19937& rng) {
  const uint64_t hi = rng() >> 5;  // 27 bits
  const uint64_t lo = rng() >> 6;  // 26 bits
  return (hi * 67108864.0 + lo) * (1.0 / 9007199254740992.0);
}

// Uniform integer in [0, n). n must be positive.
inline int uniform_below(std::mt19937& rng, int n) {
  return static_cast<int>(uniform_unit(rng) * n) % n;
}

// Uniform integer in [lo, hi] inclusive.
inline int uniform_int(std::mt19937& rng, int lo, int hi) {
  return lo + uniform_below(rng, hi - lo + 1);
}

inline double uniform_real(std::mt19937& rng, double lo, double hi) {
  return lo + uniform_unit(rng) * (hi - lo);
}

// Standard normal via Box-Muller; avoids std::normal_distribution so the
// byte-for-byte value sequence is pinned by this header alone.
inline double normal_unit(std::mt19937& rng) {
  double u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  if (u1 <= 0.0) u1 = 1e-12;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Fisher-Yates shuffle driven by uniform_below, for the same reason.
template <typename T>
void fisher_yates(std::vector<T>& items, std::mt19937& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(uniform_below(rng, static_cast<int>(i)));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace remix

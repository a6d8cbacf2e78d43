#pragma once

// Portable seeded randomness. std::mt19937_64 output is fixed by the
// standard, but the <random> distributions are not, so index selection and
// shuffling are done here with explicit algorithms.

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace dnf {

using Rng = std::mt19937_64;

/// Uniform integer in [0, n) by rejection sampling on the raw 64-bit stream.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// FNV-1a, 64-bit.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Forward Fisher-Yates.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const auto j = i + uniform_index(rng, v.size() - i);
    using std::swap;
    swap(v[i], v[j]);
  }
}

/// `k` distinct indices from [0, n), in selection order.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k && i < n; ++i) {
    const auto j = i + uniform_index(rng, n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k < n ? k : n);
  return idx;
}

}  // namespace dnf

// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace sld {

// Counter-based PRNG: every draw is a pure function of (key, counter), so
// parameter init, data synthesis and per-epoch shuffles are reproducible
// without carrying generator state through checkpoints.

namespace detail {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Derive an independent stream key from a base seed and a stream tag.
inline constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
  return detail::mix64(detail::mix64(seed + detail::kGolden) ^
                       detail::mix64(stream * 0xda942042e4dd58b5ull + 1));
}

/// Stateless generator over a fixed key; draw i is independent of draw j.
class counter_rng {
public:
  explicit counter_rng(std::uint64_t key) : key_(key) {}
  counter_rng(std::uint64_t seed, std::uint64_t stream) : key_(derive_key(seed, stream)) {}

  std::uint64_t bits(std::uint64_t i) const {
    return detail::mix64(key_ + (i + 1) * detail::kGolden);
  }

  /// Uniform double in [0, 1).
  double uniform(std::uint64_t i) const {
    return static_cast<double>(bits(i) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t i, double lo, double hi) const {
    return lo + (hi - lo) * uniform(i);
  }

  /// Standard normal via Box-Muller; draw i consumes counters 2i and 2i+1.
  double gaussian(std::uint64_t i) const {
    double u1 = (static_cast<double>(bits(2 * i) >> 11) + 0.5) * 0x1.0p-53;
    double u2 = uniform(2 * i + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::uint64_t key() const noexcept { return key_; }

private:
  std::uint64_t key_;
};

/// Deterministic permutation of {0..n-1} (Fisher-Yates keyed by `key`).
inline std::vector<int> shuffled_indices(int n, std::uint64_t key) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  counter_rng rng(key);
  for (int i = n - 1; i > 0; --i) {
    auto j = static_cast<int>(rng.bits(static_cast<std::uint64_t>(i)) %
                              static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

}  // namespace sld

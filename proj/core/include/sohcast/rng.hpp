#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace soh {

/**
 * Seeded random helper over mt19937_64. The engine is standardized but the
 * standard <random> distributions are not, so the draw algorithms live here;
 * a seeded run reproduces bit-for-bit on any toolchain.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /** Uniform in [0, 1) with 53 random mantissa bits. */
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /** Standard normal via Box-Muller; the spare draw is discarded. */
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /** Uniform index in [0, n). */
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  /** k distinct indices from [0, n), ascending. */
  std::vector<std::size_t> sample(std::size_t n, std::size_t k);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

inline std::vector<std::size_t> Rng::sample(std::size_t n, std::size_t k) {
  if (k > n) k = n;
  // Partial Fisher-Yates over an index pool, then sort for cache-friendly use.
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + index(n - i)]);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace soh

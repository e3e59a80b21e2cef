#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace p2v {

/// Seeded random generator with self-contained distributions.
///
/// The standard library leaves distribution algorithms implementation-defined,
/// so every draw here is spelled out on top of mt19937_64. Identical seeds give
/// identical streams on any platform, which is what dataset files and
/// checkpoints rely on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    // Rejection to remove modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (fixed draw count, cached pair member).
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Derive an independent stream keyed by (seed, salt); used for per-epoch
  /// and per-shard generators so resumed runs reproduce the original draws.
  Rng fork(std::uint64_t salt) const {
    std::uint64_t s = (seed_ + 0x9e3779b97f4a7c15ull) ^ (salt * 0xbf58476d1ce4e5b9ull);
    s ^= s >> 31;
    return Rng(s == 0 ? 0x853c49e6748fea9bull : s);
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Fisher-Yates with our own index draws (std::shuffle is implementation-defined).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace p2v

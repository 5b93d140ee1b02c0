#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "rdn/errors.hpp"

namespace rdn {

// splitmix64 finalizer. Used to derive independent seeds from a master seed
// plus a stream id, so that parallel or per-item RNGs never share a sequence.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b));
}

// FNV-1a, used to hash file names into per-image seed streams.
inline std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Deterministic random source. The engine is std::mt19937_64, whose output
// sequence is pinned by the standard, so results are identical across
// platforms and compilers. The floating-point draws are implemented here by
// hand (instead of std::*_distribution) for the same reason: the standard
// does not pin distribution algorithms, and we need bit-reproducible runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased uniform integer in [0, n), by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InputError("Rng::below: n must be positive");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // Standard normal via Box-Muller. The second variate of each pair is
  // cached, so draws come in a fixed, reproducible order.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Child RNG for an independent stream. Depends only on the original seed
  // and the stream id, never on how much this RNG has already been consumed.
  Rng split(std::uint64_t stream) const { return Rng(mix64(seed_, stream)); }

 private:
  std::uint64_t seed_ = 0;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rdn

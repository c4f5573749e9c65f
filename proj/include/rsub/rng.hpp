#pragma once

#include <cmath>
#include <cstdint>

namespace rsub {

/// splitmix64 step; the one mixing function used everywhere seeds are derived.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive a child seed from (seed, salt). Order-sensitive; used for per-column
/// sample streams and per-cell sweep seeds so parallel = serial by design.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (salt + 0x9e3779b97f4a7c15ULL);
  return splitmix64(s);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

/// Self-contained PRNG: splitmix64 stream + Box-Muller normals. Deliberately
/// not std::normal_distribution, whose algorithm is implementation-defined;
/// this one is bit-reproducible across platforms and toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform on (0, 1]; never 0, so log() below is safe.
  double next_uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) *
           (1.0 / 9007199254740992.0);
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.28318530717958647692 * u2;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
  }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rsub

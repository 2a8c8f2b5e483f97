#ifndef OFDMTR_RNG_HPP
#define OFDMTR_RNG_HPP

#include <cstdint>
#include <numbers>
#include <random>

#include "ofdmtr/types.hpp"

namespace ofdmtr {

/// Deterministic splittable stream: the same (seed, stream_id) always yields
/// the same sequence, and distinct stream ids give statistically independent
/// streams. Draw primitives avoid std::distribution so the byte-level output
/// is pinned by this file alone.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed, std::uint64_t stream_id = 0)
      : engine_(mix(seed, stream_id)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform index in [0, n) via masked rejection (unbiased).
  std::size_t uniform_index(std::size_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
      const std::uint64_t v = next_u64() & mask;
      if (v < n) return std::size_t(v);
    }
  }

  /// Standard normal via Box-Muller, one spare cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  /// Circularly symmetric complex Gaussian CN(0, variance).
  Cplx complex_gaussian(double variance) {
    const double s = std::sqrt(variance / 2.0);
    return {s * gaussian(), s * gaussian()};
  }

  /// Equiprobable draw from {1, -1, j, -j}.
  Cplx qpsk() {
    static constexpr Cplx kAlphabet[4] = {
        {1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
    return kAlphabet[next_u64() & 3];
  }

  /// Uniform phase in [0, 2 pi).
  double phase() { return 2.0 * std::numbers::pi * uniform01(); }

 private:
  static std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed;
    const std::uint64_t a = splitmix64(s);
    s ^= stream_id * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull;
    const std::uint64_t b = splitmix64(s);
    return a ^ (b + 0x9E3779B97F4A7C15ull);
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ofdmtr

#endif

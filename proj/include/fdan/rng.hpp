#pragma once

#include <cmath>
#include <cstdint>

namespace fdan {

// Counter-based generator: the k-th draw of a stream is a pure function of
// (seed, k), so sequences replay identically regardless of how draws are
// batched across iterations or threads. fork() derives an independent stream
// from a parent seed and a stream index; it never advances the parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() {
    return mix(seed_ + (++counter_) * 0x9E3779B97F4A7C15ull);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, 1) with 24 random bits.
  float next_float() {
    return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
  }

  // Unbiased uniform integer in [0, bound) via fixed-point multiply.
  std::uint32_t next_below(std::uint32_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t x = next_u64();
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(x) * bound) >> 64);
  }

  // Standard normal via Box-Muller; caches the second deviate.
  float gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    spare_ = static_cast<float>(r * std::sin(t));
    have_spare_ = true;
    return static_cast<float>(r * std::cos(t));
  }

  Rng fork(std::uint64_t stream) const {
    return Rng(mix(mix(seed_) ^ (stream + 0x9E3779B97F4A7C15ull)));
  }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  float spare_ = 0.f;
};

}  // namespace fdan

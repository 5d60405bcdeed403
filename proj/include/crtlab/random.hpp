/**
 * @file random.hpp
 * @brief Seeded, splittable random streams.
 *
 * Every stochastic operation in the library consumes a Stream. Streams are
 * derived from a (master_seed, stream_index) pair so that independent units
 * of work (sessions, resamples) can be generated in any order, on any
 * thread, and still reproduce bit for bit.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace crtlab {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer. A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Identifies one random stream: a master seed and a stream number under it.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  /// Seed of the j-th sub-stream nested under this one.
  constexpr SeedSpec child(std::uint64_t j) const noexcept {
    const std::uint64_t key =
        detail::mix64(detail::mix64(master_seed + detail::kGolden) ^
                      detail::rotl(detail::mix64(stream_index + 2 * detail::kGolden), 17));
    return SeedSpec{key, j};
  }

  friend constexpr bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/**
 * @brief xoshiro256** generator keyed by a SeedSpec.
 *
 * The 256-bit state holds two independent bijective images of the master
 * seed and two of the stream index, so distinct SeedSpecs never share a
 * starting state. Satisfies UniformRandomBitGenerator.
 */
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(SeedSpec seed) noexcept {
    using detail::kGolden;
    using detail::mix64;
    state_[0] = mix64(seed.master_seed + kGolden);
    state_[1] = mix64(seed.stream_index + 3 * kGolden);
    state_[2] = mix64(seed.master_seed ^ 0xD1B54A32D192ED03ULL) ^ kGolden;
    state_[3] = mix64(seed.stream_index ^ 0x8CB92BA72F3D8DD7ULL) ^ (5 * kGolden);
    // Decorrelate streams whose seeds differ in a single word.
    for (int i = 0; i < 16; ++i) (*this)();
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  /// Uniform integer on {lo, ..., hi}, unbiased (Lemire's method).
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) noexcept {
    const std::uint64_t range = hi - lo + 1;
    if (range == 0) return (*this)();  // full 64-bit span
    __uint128_t m = static_cast<__uint128_t>((*this)()) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        m = static_cast<__uint128_t>((*this)()) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return lo + static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via the Marsaglia polar method (no cached second deviate).
  double standard_normal() noexcept {
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

  double normal(double mean, double sd) noexcept { return mean + sd * standard_normal(); }

  /// Normal(mean, sd) conditioned on the draw being >= floor (rejection).
  double normal_truncated_below(double mean, double sd, double floor) noexcept {
    double x;
    do {
      x = normal(mean, sd);
    } while (x < floor);
    return x;
  }

 private:
  std::array<std::uint64_t, 4> state_{};
};

/// Deterministic, collision-free mapping from a SeedSpec to its stream.
inline Stream derive_stream(SeedSpec seed) noexcept { return Stream(seed); }

}  // namespace crtlab

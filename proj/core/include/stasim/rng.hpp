#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace stasim {

/// Counter-based generator keyed by (master seed, stream index).
///
/// Each trajectory gets its own stream, so ensemble results do not depend on
/// evaluation order or thread count. The mixing function is SplitMix64; the
/// double conversion is done by hand so that streams are bit-identical
/// across standard library implementations.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : state_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next() noexcept { return mix(state_ += 0x9e3779b97f4a7c15ULL); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Exponential with the given mean.
  double exponential(double mean) noexcept { return -mean * std::log1p(-uniform()); }

  double angle() noexcept { return 2.0 * std::numbers::pi * uniform(); }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace stasim

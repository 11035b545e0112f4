#pragma once

#include <cstdint>
#include <random>

namespace bdn {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seeded random stream used by every sampler in the library.
///
/// Generator family: std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Monte Carlo instantiation `i` of a run seeded with `s` uses
/// `Stream::substream(s, i)`, seeded with
///
///     mix64(mix64(s) ^ (i * 0x9E3779B97F4A7C15 + 0xD1B54A32D192ED03))
///
/// so every instantiation is independent of how work is split across
/// threads. Uniform, normal and gamma variates are derived here rather than
/// through <random> distributions, whose algorithms are implementation-defined.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  static Stream substream(std::uint64_t seed, std::uint64_t index) noexcept;

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (cosine branch only).
  double normal();

  /// Unit-scale gamma(shape): Marsaglia-Tsang for shape >= 1, boosted by
  /// U^(1/shape) for shape < 1.
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
};

}  // namespace bdn

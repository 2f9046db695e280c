#pragma once

#include "scaleop/common.hpp"

#include <array>
#include <cmath>
#include <cstdint>

namespace scaleop {

/// Counter-based Philox4x32-10 generator.
///
/// Streams are keyed by (seed, stream); draws within a stream are indexed by
/// a 128-bit counter, so any value in any stream can be produced without
/// sequencing through the others. Dataset manifests record (seed, stream) and
/// that is enough to reproduce every sample bit-for-bit, in any worker order.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed & 0xffffffffu),
             static_cast<std::uint32_t>(seed >> 32)},
        hi_(stream) {}

  /// Random draw #index of this stream; pure function of (seed, stream, index).
  std::uint64_t at(std::uint64_t index) const {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(index & 0xffffffffu),
        static_cast<std::uint32_t>(index >> 32),
        static_cast<std::uint32_t>(hi_ & 0xffffffffu),
        static_cast<std::uint32_t>(hi_ >> 32)};
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      ctr = philox_round(ctr, key);
      key[0] += 0x9E3779B9u;  // golden ratio
      key[1] += 0xBB67AE85u;  // sqrt(3)-1
    }
    return (static_cast<std::uint64_t>(ctr[1]) << 32) | ctr[0];
  }

  /// Sequential draw; advances the counter.
  std::uint64_t next() { return at(counter_++); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    // Modulo bias is below 2^-53 for every n used here.
    return next() % n;
  }

  /// Standard normal via Box-Muller; consumes two draws.
  double normal() {
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Pair of independent standard normals from one Box-Muller draw.
  std::array<double, 2> normal2() {
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
  }

 private:
  static std::array<std::uint32_t, 4> philox_round(
      const std::array<std::uint32_t, 4>& ctr,
      const std::array<std::uint32_t, 2>& key) {
    auto mulhilo = [](std::uint32_t a, std::uint32_t b, std::uint32_t& hi) {
      std::uint64_t p = static_cast<std::uint64_t>(a) * b;
      hi = static_cast<std::uint32_t>(p >> 32);
      return static_cast<std::uint32_t>(p);
    };
    std::uint32_t hi0, hi1;
    std::uint32_t lo0 = mulhilo(0xD2511F53u, ctr[0], hi0);
    std::uint32_t lo1 = mulhilo(0xCD9E8D57u, ctr[2], hi1);
    return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t hi_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace scaleop

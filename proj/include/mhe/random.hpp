#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mhe {

/// Stateless counter-based generator: every draw is a pure function of
/// (seed, stream, index), so samples can be produced in any order or in
/// parallel and still be reproducible.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ULL))) {}

  constexpr std::uint64_t bits(std::uint64_t index) const {
    return mix(key_ ^ mix(index + 0x632BE59BD9B4E019ULL));
  }

  /// Uniform on [0, 1).
  double uniform(std::uint64_t index) const {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

  double uniform(std::uint64_t index, double lo, double hi) const {
    return lo + (hi - lo) * uniform(index);
  }

  /// Standard normal via Box-Muller from draws 2*index and 2*index+1.
  double normal(std::uint64_t index) const {
    const double u1 = (static_cast<double>(bits(2 * index) >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finaliser
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
};

}  // namespace mhe

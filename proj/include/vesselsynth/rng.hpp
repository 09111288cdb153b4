#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace vsynth {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based stream keyed by a 64-bit key. Child keys are derived from
/// (parent key, index), so the values drawn for a tree node depend only on
/// its path from the root, never on traversal order.
class KeyedRng {
 public:
  explicit constexpr KeyedRng(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t key() const { return key_; }
  constexpr KeyedRng child(std::uint64_t index) const {
    return KeyedRng(mix64(key_ ^ mix64(index + 0x632be59bd9b4e019ULL)));
  }

  constexpr std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = std::uint64_t(hi - lo) + 1;
    return lo + int(next_u64() % span);
  }
  /// Box-Muller; one normal per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace vsynth

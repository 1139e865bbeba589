#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace dgmvp {

/// Counter-based pseudo-random stream built on the splitmix64 finalizer.
///
/// Each stream is identified by a 64-bit key; the i-th output is a hash of
/// (key, i). Child streams are derived with split(), so independent units of
/// work (grid points, trajectories, shots) can be given their own streams
/// without coordinating draw counts. Every experiment records the root key,
/// which makes all downstream draws reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t key = 0) : key_(finalize(key ^ kKeySalt)) {}

  std::uint64_t next_u64() {
    return finalize(key_ + kGolden * ++counter_);
  }

  /// Uniform double in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound) via rejection; bound must be nonzero.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  /// Derive an independent child stream. Children with distinct labels (or
  /// from distinct parents) do not collide in practice.
  Rng split(std::uint64_t label) const {
    Rng child;
    child.key_ = finalize(key_ ^ finalize(label + kSplitSalt));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t key() const { return key_; }

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kKeySalt = 0x8c92f9605b3ad1ebULL;
  static constexpr std::uint64_t kSplitSalt = 0x3c6ef372fe94f82aULL;

  static std::uint64_t finalize(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dgmvp

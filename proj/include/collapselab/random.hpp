#pragma once

#include <cstdint>
#include <string_view>

namespace collapselab {

/// Counter-based pseudo-random stream.
///
/// Draw k of a stream with key K is mix64(K + (k + 1) * 0x9E3779B97F4A7C15),
/// where mix64 is the SplitMix64 finalizer. A stream is fully described by
/// (key, counter), so any draw can be reproduced without replaying the ones
/// before it, and results do not depend on the platform's <random>.
///
/// Child streams are derived with split(i): key' = mix64(key ^ mix64(i + C)).
/// Parallel work gives sample i the stream split(i) of a task key, so totals
/// are independent of scheduling.
///
/// With sign_flip set, every symmetric draw (normal, symmetric_uniform,
/// rademacher) is negated while uniform01() and raw bits are untouched. The
/// flipped stream is the mirror image of the unflipped one.
class CounterRng {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-ctr/v2";

  explicit CounterRng(std::uint64_t seed, bool sign_flip = false)
      : key_(seed), sign_flip_(sign_flip) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }
  bool sign_flip() const { return sign_flip_; }

  CounterRng split(std::uint64_t stream) const;

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();
  /// Standard normal by the Marsaglia polar method. Pairs are cached.
  double normal();
  /// Uniform on [-half_width, half_width].
  double symmetric_uniform(double half_width);
  /// +magnitude or -magnitude with probability 1/2 each.
  double rademacher(double magnitude);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool sign_flip_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

std::uint64_t mix64(std::uint64_t z);

/// Seed for a named sub-task, e.g. one cell of a sweep.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace collapselab

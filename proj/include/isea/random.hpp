#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace isea {

using Rng = std::mt19937_64;

/// SplitMix64 as a UniformRandomBitGenerator. Seeding is free, which suits
/// the many short per-sample streams; long streams use Rng.
class StreamRng {
 public:
  using result_type = std::uint64_t;
  explicit StreamRng(std::uint64_t seed) noexcept : state_(seed) {}
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t value) noexcept;

/// Derives an independent child seed from a parent seed and a stream path.
///
/// All randomness in a run flows from the root seed through this function:
/// seed(trial t of sweep point p, stage s) = derive_seed(root, {p, t, s}).
/// Each path element is folded in with a SplitMix64 round, so sibling
/// streams never share state and the result does not depend on the order
/// in which trials are executed.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept;

/// Fixed stream identifiers for the stages of one pipeline trial.
enum class Stream : std::uint64_t {
  kChannel = 1,
  kFeature = 2,
  kSensing = 3,
  kAirNoise = 4,
  kSensingVars = 5,
  kCalibration = 6,
};

inline std::uint64_t derive_seed(std::uint64_t parent, Stream stream,
                                 std::uint64_t index = 0) noexcept {
  return derive_seed(parent, {static_cast<std::uint64_t>(stream), index});
}

}  // namespace isea

#pragma once

#include <cstdint>
#include <limits>

namespace farkasnet {

// SplitMix64: 64-bit state, one add and a finalizing mix per draw.
//
// All randomness in the library comes from one user seed. Independent
// streams (one per layer, per trial, per data split) are derived with
// Rng(seed, stream) so that adding or removing a consumer never shifts the
// draws of another one.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(mix(seed) ^ mix(stream * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Child generator for a sub-stream; does not advance this generator.
  Rng split(std::uint64_t stream) const { return Rng(state_, stream); }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace farkasnet

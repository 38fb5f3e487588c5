// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace dvae {

/// Philox4x32-10 block function: encrypts a 128-bit counter under a 64-bit key.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based generator built on Philox4x32-10.
///
/// The full state is (key, stream, position): `key` is the user seed, `stream`
/// occupies the high 64 bits of the Philox counter and `position` the low 64
/// bits. Every draw consumes exactly one counter block, so a stream can be
/// saved and restored by copying three integers, and two streams with
/// different `stream` values never overlap.
class Rng {
 public:
  using result_type = std::uint64_t;

  struct State {
    std::uint64_t key = 0;
    std::uint64_t stream = 0;
    std::uint64_t position = 0;

    friend bool operator==(const State&, const State&) = default;
  };

  Rng() noexcept : Rng(0, 0) {}
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : state_{seed, stream, 0} {}
  explicit Rng(State state) noexcept : state_(state) {}

  /// Independent child stream. Children of the same parent with different
  /// ids are disjoint from each other and from the parent.
  Rng split(std::uint64_t id) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal draw (Box-Muller, one counter block per draw).
  double normal() noexcept;
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

  const State& state() const noexcept { return state_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next_u64(); }

 private:
  std::array<std::uint32_t, 4> next_block() noexcept;

  State state_;
};

/// Stream ids used by training; fixed so checkpoints stay compatible.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kWalk = 3;
inline constexpr std::uint64_t kData = 4;
inline constexpr std::uint64_t kSample = 5;
}  // namespace streams

}  // namespace dvae

// Counter-based random streams (Philox4x32-10, Salmon et al. 2011).
//
// A stream is addressed by (key, stream id); draws inside it advance a block
// counter. Two streams with different ids never share a counter value, so a
// cell's collisions in a given step consume the same numbers regardless of
// which thread processes the cell or in what order.

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace granular {

class PhiloxStream {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  /// Counter layout: word 0 = block counter, word 1 = stream_lo,
  /// words 2..3 = stream_hi.
  PhiloxStream(std::uint64_t key, std::uint64_t stream_hi, std::uint32_t stream_lo)
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        counter_{0u, stream_lo, static_cast<std::uint32_t>(stream_hi),
                 static_cast<std::uint32_t>(stream_hi >> 32)} {}

  static Block generate(Block counter, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * counter[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * counter[2];
      counter = {static_cast<std::uint32_t>(p1 >> 32) ^ counter[1] ^ key[0],
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ counter[3] ^ key[1],
                 static_cast<std::uint32_t>(p0)};
    }
    return counter;
  }

  std::uint64_t operator()() {
    if (buffered_ == 0) {
      block_ = generate(counter_, key_);
      ++counter_[0];
      buffered_ = 2;
    }
    const int i = 2 - buffered_--;
    return (static_cast<std::uint64_t>(block_[2 * i + 1]) << 32) | block_[2 * i];
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n). Lemire's multiply-shift; the bias is below
  /// 2^-32 for the cell sizes used here.
  std::uint64_t below(std::uint64_t n) {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>((*this)()) * n) >> 64);
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  Key key_;
  Block counter_;
  Block block_{};
  int buffered_ = 0;
};

/// Stream-purpose tags mixed into the key so initial sampling and collision
/// streams built from the same user seed never coincide.
enum class StreamPurpose : std::uint64_t {
  initial_positions = 0x1,
  initial_velocities = 0x2,
  collisions = 0x3,
};

/// SplitMix64 finalizer over (seed, purpose).
inline std::uint64_t derive_key(std::uint64_t seed, StreamPurpose purpose) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(purpose) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace granular

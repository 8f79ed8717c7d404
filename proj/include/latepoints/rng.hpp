#pragma once

// Counter-based random streams.
//
// Philox4x32-10 keyed by a 64-bit seed.  A stream is addressed by
// (seed, lane): the 128-bit counter is (block_lo, block_hi, lane_lo, lane_hi),
// so block b of lane l is a pure function of (seed, l, b) and any step of a
// walk can be regenerated without replaying the prefix.
//
// Replica seeds are derived from a master seed with the SplitMix64
// finalizer:  replica_seed(master, i) = mix64(master + (i + 1) * 0x9E3779B97F4A7C15).

#include <array>
#include <cstdint>
#include <limits>

namespace latepoints::rng {

using Block = std::array<std::uint32_t, 4>;

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr Block philox4x32_10(Block ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kPhiloxM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kPhiloxM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t replica_seed(std::uint64_t master, std::uint64_t replica) {
  return mix64(master + (replica + 1) * 0x9E3779B97F4A7C15ull);
}

/// Reserved lanes.  Lane 0 drives the walk itself.
enum class Lane : std::uint64_t { walk = 0, late_sample = 0x59 };

/// Random block (seed, lane, index).
constexpr Block block_at(std::uint64_t seed, std::uint64_t lane, std::uint64_t index) {
  return philox4x32_10(
      {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
       static_cast<std::uint32_t>(lane), static_cast<std::uint32_t>(lane >> 32)},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
}

/// Sequential 64-bit draws from one (seed, lane) stream.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t lane) : seed_(seed), lane_(lane) {}
  Stream(std::uint64_t seed, Lane lane) : Stream(seed, static_cast<std::uint64_t>(lane)) {}

  std::uint64_t next_u64() {
    if (used_ == 2) {
      buf_ = block_at(seed_, lane_, index_++);
      used_ = 0;
    }
    const std::uint64_t v = (std::uint64_t{buf_[2 * used_ + 1]} << 32) | buf_[2 * used_];
    ++used_;
    return v;
  }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v < limit) return v % bound;
    }
  }

  /// Uniform double in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t seed_;
  std::uint64_t lane_;
  std::uint64_t index_ = 0;
  Block buf_{};
  int used_ = 2;
};

/// Two-bit direction draws.  Step t (1-based) uses bits 2*j, 2*j+1 of
/// block (t-1)/64, where j = (t-1) % 64 counts through words 0..3 of the
/// block from the least significant bit.
class DirectionStream {
 public:
  explicit DirectionStream(std::uint64_t seed) : seed_(seed) {}

  unsigned next() {
    if (pos_ == 64) {
      buf_ = block_at(seed_, static_cast<std::uint64_t>(Lane::walk), index_++);
      pos_ = 0;
    }
    const unsigned d = (buf_[pos_ >> 4] >> (2 * (pos_ & 15))) & 3u;
    ++pos_;
    return d;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t index_ = 0;
  Block buf_{};
  unsigned pos_ = 64;
};

}  // namespace latepoints::rng

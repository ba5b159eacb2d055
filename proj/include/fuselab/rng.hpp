#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace fuselab {

/// Philox4x32-10 block function (Salmon et al., Random123). Maps a 128-bit
/// counter and a 64-bit key to 128 pseudo-random bits.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

/// Named random streams for substream splitting.
enum class StreamId : std::uint32_t {
  truth = 0,
  sensor_base = 1,  // sensor i (0-based) uses sensor_base + i
};

/// Counter-based generator for one (seed, run, stream) triple. Every triple
/// yields an independent sequence, so Monte Carlo runs can execute in any
/// order on any number of threads. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint32_t run, std::uint32_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, run_(run), stream_(stream) {}

  static CounterRng for_sensor(std::uint64_t seed, std::uint32_t run, std::size_t sensor) {
    return {seed, run, static_cast<std::uint32_t>(StreamId::sensor_base) + static_cast<std::uint32_t>(sensor)};
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (cursor_ == 2) refill();
    return buffer_[cursor_++];
  }

  /// Number of 128-bit blocks consumed so far.
  std::uint64_t blocks() const { return block_; }

 private:
  void refill() {
    const auto out = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), run_,
                                 stream_},
                                key_);
    ++block_;
    buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
    buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
    cursor_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t run_;
  std::uint32_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int cursor_ = 2;
};

}  // namespace fuselab

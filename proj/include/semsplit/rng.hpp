#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace semsplit {

/// Identifier of the counter-based generator used throughout; config files
/// must name this algorithm so sequences stay reproducible across ports.
inline constexpr std::string_view kRngAlgorithmId = "philox4x32-10";

/// Logical substreams. Distinct streams over the same seed are independent.
enum class RngStream : std::uint32_t {
  kChannel = 1,
  kTransport = 2,
  kPolicy = 3,
  kMapGen = 4,
  kInit = 5,
  kShuffle = 6,
};

/// Philox4x32-10 counter-based generator (Salmon et al. reference constants).
///
/// The 128-bit counter is laid out as [block_lo, block_hi, seq_lo,
/// seq_hi ^ stream_hash]; the 64-bit key is the seed. A (seed, stream,
/// sequence) triple therefore addresses an independent, replayable stream.
class PhiloxRng {
 public:
  PhiloxRng(std::uint64_t seed, RngStream stream, std::uint64_t sequence = 0)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        ctr2_(static_cast<std::uint32_t>(sequence)),
        ctr3_(static_cast<std::uint32_t>(sequence >> 32) ^
              (static_cast<std::uint32_t>(stream) * 0x9E3779B9u)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return block_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe as a log() argument.
  double next_double_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; pairs are cached.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_double_open();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = kMul0 * static_cast<std::uint64_t>(ctr[0]);
      const std::uint64_t p1 = kMul1 * static_cast<std::uint64_t>(ctr[2]);
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint64_t kMul0 = 0xD2511F53ull;
  static constexpr std::uint64_t kMul1 = 0xCD9E8D57ull;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  void refill() {
    block_ = block({static_cast<std::uint32_t>(block_index_),
                    static_cast<std::uint32_t>(block_index_ >> 32), ctr2_, ctr3_},
                   {key0_, key1_});
    ++block_index_;
    pos_ = 0;
  }

  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
  std::uint32_t key0_, key1_, ctr2_, ctr3_;
  std::uint64_t block_index_ = 0;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace semsplit

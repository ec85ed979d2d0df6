#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "semsplit/rng.hpp"

namespace semsplit {

/// One byte per bit, values 0/1.
using Bitstream = std::vector<std::uint8_t>;

enum class Modulation {
  kGrayQuadrature,  // Gray-coded quadrature scheme, BER = Q(sqrt(sinr))
};

struct BitChannelModel {
  Modulation modulation = Modulation::kGrayQuadrature;
  double sinr = 0.0;
};

/// Gaussian tail function Q(x) via the complementary error function.
inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// BER of the modeled bit channel, clamped to [0, 0.5].
inline double ber_from_sinr(const BitChannelModel& m) {
  if (!(m.sinr >= 0.0)) throw std::domain_error("ber_from_sinr: sinr must be >= 0");
  const double ber = q_function(std::sqrt(m.sinr));
  return ber < 0.0 ? 0.0 : (ber > 0.5 ? 0.5 : ber);
}

inline double ber_from_sinr(double sinr) { return ber_from_sinr(BitChannelModel{.sinr = sinr}); }

namespace detail {

// Flip decisions compare a 32-bit uniform draw against ber * 2^32. Reusing a
// (seed, sequence) pair across increasing ber values yields nested flip sets,
// which keeps Monte-Carlo sweeps exactly monotone.
inline std::uint64_t flip_threshold(double ber) {
  if (!(ber >= 0.0) || !(ber <= 0.5))
    throw std::domain_error("transmit_bits: ber must be in [0, 0.5]");
  return static_cast<std::uint64_t>(std::llround(ber * 4294967296.0));
}

}  // namespace detail

/// Binary symmetric channel: each bit independently flipped with probability
/// ber; deterministic for a fixed (seed, sequence).
inline Bitstream transmit_bits(const Bitstream& bits, double ber, std::uint64_t seed,
                               std::uint64_t sequence = 0) {
  const std::uint64_t threshold = detail::flip_threshold(ber);
  Bitstream out = bits;
  if (threshold == 0) return out;
  PhiloxRng rng(seed, RngStream::kTransport, sequence);
  for (auto& b : out)
    if (rng.next_u32() < threshold) b ^= 1u;
  return out;
}

/// In-place variant returning the number of flipped bits.
inline long long transmit_bits_inplace(Bitstream& bits, double ber, std::uint64_t seed,
                                       std::uint64_t sequence) {
  const std::uint64_t threshold = detail::flip_threshold(ber);
  if (threshold == 0) return 0;
  PhiloxRng rng(seed, RngStream::kTransport, sequence);
  long long flips = 0;
  for (auto& b : bits)
    if (rng.next_u32() < threshold) {
      b ^= 1u;
      ++flips;
    }
  return flips;
}

}  // namespace semsplit

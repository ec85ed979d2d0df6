#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "semsplit/rng.hpp"
#include "semsplit/units.hpp"

namespace semsplit {

/// Large-scale propagation and noise bookkeeping for the downlink.
class PathLossParams {
 public:
  PathLossParams(double epsilon0, double d0_m, double alpha, double bandwidth_hz,
                 double noise_psd_dbm_hz)
      : epsilon0_(epsilon0),
        d0_m_(d0_m),
        alpha_(alpha),
        bandwidth_hz_(bandwidth_hz),
        noise_psd_dbm_hz_(noise_psd_dbm_hz) {
    if (!(epsilon0 > 0.0) || !std::isfinite(epsilon0))
      throw std::invalid_argument("PathLossParams: epsilon0 must be positive");
    if (!(d0_m > 0.0) || !std::isfinite(d0_m))
      throw std::invalid_argument("PathLossParams: d0 must be positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("PathLossParams: alpha must be positive");
    if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz))
      throw std::invalid_argument("PathLossParams: bandwidth must be positive");
    if (!std::isfinite(noise_psd_dbm_hz))
      throw std::invalid_argument("PathLossParams: noise PSD must be finite");
    noise_power_w_ = dbm_to_watts(noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz));
  }

  double epsilon0() const { return epsilon0_; }
  double d0_m() const { return d0_m_; }
  double alpha() const { return alpha_; }
  double bandwidth_hz() const { return bandwidth_hz_; }
  double noise_psd_dbm_hz() const { return noise_psd_dbm_hz_; }

  /// Full-band noise power in watts, cached at construction.
  double noise_power_w() const { return noise_power_w_; }

 private:
  double epsilon0_, d0_m_, alpha_, bandwidth_hz_, noise_psd_dbm_hz_;
  double noise_power_w_;
};

/// One channel realization: per-user complex gain vectors plus the
/// distances and seed they were drawn from.
struct ChannelSet {
  std::vector<std::vector<std::complex<double>>> per_user;
  std::vector<double> distances_m;
  std::uint64_t seed = 0;

  int n_users() const { return static_cast<int>(per_user.size()); }
  int n_antennas() const { return per_user.empty() ? 0 : static_cast<int>(per_user[0].size()); }
};

/// epsilon0 * (d / d0)^(-alpha)
inline double path_loss_gain(double distance_m, const PathLossParams& p) {
  if (!(distance_m > 0.0) || !std::isfinite(distance_m))
    throw std::domain_error("path_loss_gain: distance must be positive");
  return p.epsilon0() * std::pow(distance_m / p.d0_m(), -p.alpha());
}

inline double noise_power(const PathLossParams& p) { return p.noise_power_w(); }

/// Rayleigh small-scale fading scaled by sqrt of the path-loss gain.
/// Pure function of (seed, sequence, distances, n_t, params): replaying the
/// same inputs yields bit-identical vectors.
inline ChannelSet draw_channels(const std::vector<double>& distances_m, int n_t,
                                const PathLossParams& p, std::uint64_t seed,
                                std::uint64_t sequence = 0) {
  if (distances_m.empty())
    throw std::invalid_argument("draw_channels: distances must be non-empty");
  if (n_t < 1) throw std::invalid_argument("draw_channels: n_t must be >= 1");

  PhiloxRng rng(seed, RngStream::kChannel, sequence);
  ChannelSet set;
  set.distances_m = distances_m;
  set.seed = seed;
  set.per_user.reserve(distances_m.size());
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  for (double d : distances_m) {
    const double scale = std::sqrt(path_loss_gain(d, p));
    std::vector<std::complex<double>> h(static_cast<std::size_t>(n_t));
    for (auto& entry : h) {
      // CN(0,1): real and imaginary parts each N(0, 1/2).
      const double re = rng.next_normal() * kInvSqrt2;
      const double im = rng.next_normal() * kInvSqrt2;
      entry = std::complex<double>(scale * re, scale * im);
    }
    set.per_user.push_back(std::move(h));
  }
  return set;
}

}  // namespace semsplit

#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "semsplit/channel.hpp"

namespace semsplit {

/// Common precoder w_c plus one private precoder per user, all length N_t.
/// Amplitudes carry sqrt-watt units; symbols are unit power by convention.
struct BeamformerSet {
  std::vector<std::complex<double>> common;
  std::vector<std::vector<std::complex<double>>> private_beams;

  int n_users() const { return static_cast<int>(private_beams.size()); }
  int n_antennas() const { return static_cast<int>(common.size()); }
};

struct SinrReport {
  std::vector<double> common_sinr;
  std::vector<double> private_sinr;
};

namespace detail {

inline std::complex<double> inner_product_h(const std::vector<std::complex<double>>& h,
                                            const std::vector<std::complex<double>>& w) {
  if (h.size() != w.size())
    throw std::invalid_argument("precode: channel/beamformer length mismatch");
  std::complex<double> acc(0.0, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) acc += std::conj(h[i]) * w[i];
  return acc;
}

inline void check_dims(const ChannelSet& h, const BeamformerSet& b) {
  if (h.n_users() != b.n_users())
    throw std::invalid_argument("precode: user count mismatch");
  for (const auto& hu : h.per_user)
    if (static_cast<int>(hu.size()) != b.n_antennas())
      throw std::invalid_argument("precode: antenna count mismatch");
  for (const auto& w : b.private_beams)
    if (w.size() != b.common.size())
      throw std::invalid_argument("precode: beamformer length mismatch");
}

}  // namespace detail

/// ||w_c||^2 + sum_k ||w_k||^2
inline double total_power(const BeamformerSet& b) {
  double power = 0.0;
  for (const auto& w : b.common) power += std::norm(w);
  for (const auto& beam : b.private_beams)
    for (const auto& w : beam) power += std::norm(w);
  return power;
}

/// gamma_c,k = |h_k^H w_c|^2 / (sum_{j=1..K} |h_k^H w_j|^2 + sigma2).
/// The denominator sums over every private stream, user k's own included.
inline std::vector<double> common_sinr(const ChannelSet& h, const BeamformerSet& b,
                                       double sigma2) {
  detail::check_dims(h, b);
  if (!(sigma2 > 0.0)) throw std::domain_error("common_sinr: sigma2 must be positive");
  std::vector<double> out(static_cast<std::size_t>(h.n_users()));
  for (int k = 0; k < h.n_users(); ++k) {
    const auto& hk = h.per_user[static_cast<std::size_t>(k)];
    const double signal = std::norm(detail::inner_product_h(hk, b.common));
    double interference = 0.0;
    for (const auto& wj : b.private_beams)
      interference += std::norm(detail::inner_product_h(hk, wj));
    out[static_cast<std::size_t>(k)] = signal / (interference + sigma2);
  }
  return out;
}

/// gamma_p,k = |h_k^H w_k|^2 / (sum_{j != k} |h_k^H w_j|^2 + sigma2).
/// The common stream is already removed by successive decoding.
inline std::vector<double> private_sinr(const ChannelSet& h, const BeamformerSet& b,
                                        double sigma2) {
  detail::check_dims(h, b);
  if (!(sigma2 > 0.0)) throw std::domain_error("private_sinr: sigma2 must be positive");
  std::vector<double> out(static_cast<std::size_t>(h.n_users()));
  for (int k = 0; k < h.n_users(); ++k) {
    const auto& hk = h.per_user[static_cast<std::size_t>(k)];
    double signal = 0.0;
    double interference = 0.0;
    for (int j = 0; j < b.n_users(); ++j) {
      const double term =
          std::norm(detail::inner_product_h(hk, b.private_beams[static_cast<std::size_t>(j)]));
      if (j == k)
        signal = term;
      else
        interference += term;
    }
    out[static_cast<std::size_t>(k)] = signal / (interference + sigma2);
  }
  return out;
}

inline SinrReport compute_sinrs(const ChannelSet& h, const BeamformerSet& b, double sigma2) {
  return SinrReport{common_sinr(h, b, sigma2), private_sinr(h, b, sigma2)};
}

/// Additive decomposition of the noiseless received signal at one user:
/// desired private term, multi-user interference, and the common term.
struct ReceivedSignalTerms {
  std::complex<double> desired;
  std::complex<double> interference;
  std::complex<double> common;

  std::complex<double> sum() const { return desired + interference + common; }
};

/// symbols[0] is the common symbol, symbols[1 + j] the private symbol of user j.
inline ReceivedSignalTerms received_signal_terms(const std::vector<std::complex<double>>& h_k,
                                                 int user_index, const BeamformerSet& b,
                                                 std::span<const std::complex<double>> symbols) {
  if (user_index < 0 || user_index >= b.n_users())
    throw std::invalid_argument("received_signal_terms: user index out of range");
  if (static_cast<int>(symbols.size()) != b.n_users() + 1)
    throw std::invalid_argument("received_signal_terms: need 1 + K symbols");
  ReceivedSignalTerms terms{};
  terms.common = detail::inner_product_h(h_k, b.common) * symbols[0];
  for (int j = 0; j < b.n_users(); ++j) {
    const std::complex<double> contrib =
        detail::inner_product_h(h_k, b.private_beams[static_cast<std::size_t>(j)]) *
        symbols[static_cast<std::size_t>(1 + j)];
    if (j == user_index)
      terms.desired = contrib;
    else
      terms.interference += contrib;
  }
  return terms;
}

}  // namespace semsplit

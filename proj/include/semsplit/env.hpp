#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "semsplit/bitchannel.hpp"
#include "semsplit/channel.hpp"
#include "semsplit/mapgen.hpp"
#include "semsplit/precode.hpp"
#include "semsplit/semcodec.hpp"
#include "semsplit/ses.hpp"
#include "semsplit/spellcheck.hpp"

namespace semsplit {

/// Which streams and codecs a scheme assembly enables. The full-splitting
/// scheme broadcasts the map on the common stream and unicasts text on the
/// private streams; SDMA baselines drop the common stream entirely and carry
/// their single payload on per-user private beams.
struct SchemeFlags {
  bool common_stream = true;
  bool send_map = true;
  bool send_text = true;
  bool binary_map_codec = false;
};

struct TextConfig {
  std::vector<std::string> prompts;  // one per user, >= n_max words each
  int n_max = 8;
  Dictionary dictionary;
  bool spell_correction = false;
};

struct MapConfig {
  int grid_h = 48;
  int grid_w = 64;
  int n_classes = 8;
  int m_max = 16;
  MapGenParams gen;
};

struct EnvConfig {
  int n_users = 3;
  int n_tx_antennas = 8;
  double p_max_watts = 1.0;
  double p_max_norm_ref_watts = 1.0;   // state normalization reference
  std::vector<double> ses_thresholds;  // I_th per user, in [0, 2]
  double alpha_penalty = 10.0;
  double beta_penalty = 10.0;
  int steps_per_episode = 32;
  // Block fading: redraw the channel every step (i.i.d. contextual task) or
  // hold it for a whole episode and redraw at episode boundaries.
  bool redraw_channels_each_step = true;
  std::vector<double> distances_m;
  PathLossParams path_loss{1e-3, 1.0, 3.4, 1e7, -174.0};
  MapConfig map;
  TextConfig text;
  SurrogateParams surrogate;

  void validate() const {
    if (n_users < 1) throw std::invalid_argument("EnvConfig: need at least one user");
    if (n_tx_antennas < 1) throw std::invalid_argument("EnvConfig: need at least one antenna");
    if (!(p_max_watts > 0.0)) throw std::invalid_argument("EnvConfig: p_max must be positive");
    if (!(p_max_norm_ref_watts > 0.0))
      throw std::invalid_argument("EnvConfig: p_max normalization reference must be positive");
    if (static_cast<int>(ses_thresholds.size()) != n_users)
      throw std::invalid_argument("EnvConfig: need one SES threshold per user");
    for (double th : ses_thresholds)
      if (!(th >= 0.0) || !(th <= 2.0))
        throw std::invalid_argument("EnvConfig: SES thresholds must lie in [0,2]");
    if (!(alpha_penalty >= 0.0) || !(beta_penalty >= 0.0))
      throw std::invalid_argument("EnvConfig: penalty weights must be nonnegative");
    if (steps_per_episode < 1)
      throw std::invalid_argument("EnvConfig: steps_per_episode must be >= 1");
    if (static_cast<int>(distances_m.size()) != n_users)
      throw std::invalid_argument("EnvConfig: need one distance per user");
    for (double d : distances_m)
      if (!(d > 0.0)) throw std::invalid_argument("EnvConfig: distances must be positive");
    TileGeometry{map.grid_h, map.grid_w, map.n_classes, map.m_max}.validate();
    map.gen.validate();
    if (static_cast<int>(text.prompts.size()) != n_users)
      throw std::invalid_argument("EnvConfig: need one prompt per user");
    if (text.n_max < 1) throw std::invalid_argument("EnvConfig: n_max must be >= 1");
    for (const auto& prompt : text.prompts)
      if (static_cast<int>(split_words(prompt).size()) < text.n_max)
        throw std::invalid_argument("EnvConfig: every prompt needs at least n_max words");
    if (text.spell_correction && text.dictionary.empty())
      throw std::invalid_argument("EnvConfig: spell correction enabled without a dictionary");
    surrogate.validate();
  }

  /// Channel-component normalizer: amplitude scale of the closest user.
  double state_channel_scale() const {
    const double d_min = *std::min_element(distances_m.begin(), distances_m.end());
    return std::sqrt(path_loss_gain(d_min, path_loss));
  }
};

// ---------------------------------------------------------------------------
// State / action codecs
// ---------------------------------------------------------------------------

using StateVector = std::vector<double>;
using ActionVector = std::vector<double>;

inline int state_length(int n_users, int n_tx_antennas) {
  return 2 * n_tx_antennas * n_users + 1 + n_users;
}

inline int action_length(int n_users, int n_tx_antennas) {
  return 2 * n_tx_antennas + 2 * n_tx_antennas * n_users + 1 + n_users;
}

/// Layout: [Re(h_1)..Re(h_K), Im(h_1)..Im(h_K), P_max, I_th,1..K].
/// Channel parts are scaled by the strongest-user amplitude, P_max by the
/// configured reference; thresholds stay raw.
inline StateVector encode_state(const ChannelSet& channels, const EnvConfig& cfg) {
  if (channels.n_users() != cfg.n_users || channels.n_antennas() != cfg.n_tx_antennas)
    throw std::invalid_argument("encode_state: channel dimensions do not match config");
  const double inv_scale = 1.0 / cfg.state_channel_scale();
  StateVector s;
  s.reserve(static_cast<std::size_t>(state_length(cfg.n_users, cfg.n_tx_antennas)));
  for (const auto& h : channels.per_user)
    for (const auto& v : h) s.push_back(v.real() * inv_scale);
  for (const auto& h : channels.per_user)
    for (const auto& v : h) s.push_back(v.imag() * inv_scale);
  s.push_back(cfg.p_max_watts / cfg.p_max_norm_ref_watts);
  for (double th : cfg.ses_thresholds) s.push_back(th);
  return s;
}

/// Inverse of encode_state's channel section, for round-trip checks.
inline ChannelSet decode_state_channels(const StateVector& s, const EnvConfig& cfg) {
  if (static_cast<int>(s.size()) != state_length(cfg.n_users, cfg.n_tx_antennas))
    throw std::invalid_argument("decode_state_channels: state length mismatch");
  const double scale = cfg.state_channel_scale();
  ChannelSet channels;
  channels.distances_m = cfg.distances_m;
  const int nt = cfg.n_tx_antennas;
  const int k_users = cfg.n_users;
  channels.per_user.assign(static_cast<std::size_t>(k_users), {});
  for (int k = 0; k < k_users; ++k) {
    auto& h = channels.per_user[static_cast<std::size_t>(k)];
    h.resize(static_cast<std::size_t>(nt));
    for (int i = 0; i < nt; ++i) {
      const double re = s[static_cast<std::size_t>(k * nt + i)] * scale;
      const double im = s[static_cast<std::size_t>(k_users * nt + k * nt + i)] * scale;
      h[static_cast<std::size_t>(i)] = std::complex<double>(re, im);
    }
  }
  return channels;
}

/// Quantizes a relaxed budget value in [-1, 1] to n = round((raw+1)/2 * max),
/// clamped to [0, max].
inline int quantize_budget(double raw, int max_units) {
  const int n = static_cast<int>(std::lround((raw + 1.0) / 2.0 * max_units));
  return std::clamp(n, 0, max_units);
}

/// Layout: [Re(w_c), Im(w_c), Re(w_1..K), Im(w_1..K), n_c_raw, n_p_raw,1..K].
/// Beamformer entries are tanh-squashed then scaled by
/// sqrt(P_max / (2 N_t (K+1))) per component, so total power cannot exceed
/// P_max. Budget entries are clamped to [-1, 1] before quantization.
inline std::pair<BeamformerSet, SemanticBudget> decode_action(const ActionVector& a,
                                                              const EnvConfig& cfg) {
  const int nt = cfg.n_tx_antennas;
  const int k_users = cfg.n_users;
  if (static_cast<int>(a.size()) != action_length(k_users, nt))
    throw std::invalid_argument("decode_action: action length mismatch");
  const double scale = std::sqrt(cfg.p_max_watts / (2.0 * nt * (k_users + 1)));

  BeamformerSet beams;
  beams.common.resize(static_cast<std::size_t>(nt));
  std::size_t pos = 0;
  for (int i = 0; i < nt; ++i)
    beams.common[static_cast<std::size_t>(i)].real(std::tanh(a[pos++]) * scale);
  for (int i = 0; i < nt; ++i)
    beams.common[static_cast<std::size_t>(i)].imag(std::tanh(a[pos++]) * scale);
  beams.private_beams.assign(static_cast<std::size_t>(k_users), {});
  for (int k = 0; k < k_users; ++k) {
    auto& w = beams.private_beams[static_cast<std::size_t>(k)];
    w.resize(static_cast<std::size_t>(nt));
    for (int i = 0; i < nt; ++i) w[static_cast<std::size_t>(i)].real(std::tanh(a[pos++]) * scale);
  }
  for (int k = 0; k < k_users; ++k) {
    auto& w = beams.private_beams[static_cast<std::size_t>(k)];
    for (int i = 0; i < nt; ++i) w[static_cast<std::size_t>(i)].imag(std::tanh(a[pos++]) * scale);
  }

  SemanticBudget budget;
  budget.m_max = cfg.map.m_max;
  budget.n_max = cfg.text.n_max;
  budget.n_c = quantize_budget(std::clamp(a[pos++], -1.0, 1.0), cfg.map.m_max);
  budget.n_p.resize(static_cast<std::size_t>(k_users));
  for (int k = 0; k < k_users; ++k)
    budget.n_p[static_cast<std::size_t>(k)] =
        quantize_budget(std::clamp(a[pos++], -1.0, 1.0), cfg.text.n_max);
  return {std::move(beams), std::move(budget)};
}

// ---------------------------------------------------------------------------
// Reward
// ---------------------------------------------------------------------------

struct RewardBreakdown {
  double reward = 0.0;
  double power_violation = 0.0;             // max(0, power - P_max)
  std::vector<double> ses_shortfalls;       // max(0, I_th,k - f_k)
};

/// r = sum_k f_k + alpha * min(0, P_max - power) + beta * sum_k min(0, f_k - I_th,k)
inline RewardBreakdown compute_reward(std::span<const double> ses_totals, double power_used,
                                      const EnvConfig& cfg) {
  if (static_cast<int>(ses_totals.size()) != cfg.n_users)
    throw std::invalid_argument("compute_reward: SES count mismatch");
  RewardBreakdown out;
  double objective = 0.0;
  for (double f : ses_totals) objective += f;
  out.power_violation = std::max(0.0, power_used - cfg.p_max_watts);
  double shortfall_sum = 0.0;
  out.ses_shortfalls.resize(ses_totals.size());
  for (std::size_t k = 0; k < ses_totals.size(); ++k) {
    out.ses_shortfalls[k] = std::max(0.0, cfg.ses_thresholds[k] - ses_totals[k]);
    shortfall_sum += out.ses_shortfalls[k];
  }
  out.reward = objective - cfg.alpha_penalty * out.power_violation -
               cfg.beta_penalty * shortfall_sum;
  return out;
}

/// sum_l gamma^l r_{t+l}
inline double discounted_return(std::span<const double> rewards, double gamma) {
  if (!(gamma > 0.0) || !(gamma <= 1.0))
    throw std::domain_error("discounted_return: gamma must lie in (0, 1]");
  double acc = 0.0;
  double w = 1.0;
  for (double r : rewards) {
    acc += w * r;
    w *= gamma;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

struct StepOutcome {
  double reward = 0.0;
  std::vector<SesScore> per_user_ses;
  double power_used = 0.0;
  double power_slack = 0.0;            // P_max - power_used
  std::vector<double> ses_slacks;      // f_k - I_th,k
  std::vector<double> ber_common;      // modeled BER of the map stream per user
  std::vector<double> ber_private;     // modeled BER of the text stream per user
  std::vector<double> rho_common;      // delivered map fraction per user
  std::vector<double> rho_private;     // delivered text fraction per user
  long long map_bits_sent = 0;
  long long map_bits_flipped = 0;
  long long text_bits_sent = 0;
  long long text_bits_flipped = 0;
  StateVector next_state;
};

/// One-step episode dynamics tying channel, precoding, codecs, and the SES
/// evaluator together. Channels are drawn i.i.d. per step (block fading);
/// the source map and prompts are fixed per environment instance.
class Environment {
 public:
  Environment(EnvConfig cfg, SchemeFlags scheme, std::uint64_t seed)
      : cfg_(std::move(cfg)), scheme_(scheme), seed_(seed) {
    cfg_.validate();
    source_map_ = generate_map(cfg_.map.grid_h, cfg_.map.grid_w, cfg_.map.n_classes, cfg_.map.gen,
                               seed_);
    class_probs_ = source_map_.class_histogram();
    for (const auto& prompt : cfg_.text.prompts)
      prompt_words_.push_back(split_words(prompt));
    evaluator_ = std::make_unique<SurrogateSesEvaluator>(cfg_.surrogate, cfg_.map.m_max);
    channels_ = draw_channels(cfg_.distances_m, cfg_.n_tx_antennas, cfg_.path_loss, seed_,
                              channel_sequence_++);
  }

  const EnvConfig& config() const { return cfg_; }
  const SchemeFlags& scheme() const { return scheme_; }
  const SemanticMap& source_map() const { return source_map_; }
  const std::vector<double>& class_probs() const { return class_probs_; }
  const ChannelSet& channels() const { return channels_; }
  const SesEvaluator& evaluator() const { return *evaluator_; }

  int state_dim() const { return state_length(cfg_.n_users, cfg_.n_tx_antennas); }
  int action_dim() const { return action_length(cfg_.n_users, cfg_.n_tx_antennas); }

  /// Overrides the SINR-derived BERs; used by the BER sweeps.
  void inject_ber(std::optional<double> map_ber, std::optional<double> text_ber) {
    injected_map_ber_ = map_ber;
    injected_text_ber_ = text_ber;
  }

  /// Pins the transport noise sequence (paired sampling across sweep points).
  void set_transport_sequence_base(std::optional<std::uint64_t> base) {
    transport_sequence_base_ = base;
  }

  StateVector reset() { return encode_state(channels_, cfg_); }

  StepOutcome step(const ActionVector& action) {
    auto [beams, budget] = decode_action(action, cfg_);
    if (!scheme_.common_stream)
      for (auto& w : beams.common) w = std::complex<double>(0.0, 0.0);
    if (!scheme_.send_map) budget.n_c = 0;
    if (!scheme_.send_text)
      for (auto& n : budget.n_p) n = 0;

    const double sigma2 = cfg_.path_loss.noise_power_w();
    const std::vector<double> sinr_p = private_sinr(channels_, beams, sigma2);
    const std::vector<double> sinr_c = scheme_.common_stream
                                           ? common_sinr(channels_, beams, sigma2)
                                           : std::vector<double>(sinr_p.size(), 0.0);

    StepOutcome out;
    out.power_used = total_power(beams);
    const int k_users = cfg_.n_users;
    out.ber_common.resize(static_cast<std::size_t>(k_users), 0.0);
    out.ber_private.resize(static_cast<std::size_t>(k_users), 0.0);
    out.rho_common.resize(static_cast<std::size_t>(k_users), 0.0);
    out.rho_private.resize(static_cast<std::size_t>(k_users), 0.0);
    out.per_user_ses.resize(static_cast<std::size_t>(k_users));

    // The map travels on the common stream under splitting schemes and on
    // each user's private beam under the SDMA map-only baseline.
    Bitstream map_bits;
    if (scheme_.send_map && budget.n_c > 0)
      map_bits = scheme_.binary_map_codec
                     ? label_binary_encode(source_map_, budget.n_c, cfg_.map.m_max)
                     : onehot_encode(source_map_, budget.n_c, cfg_.map.m_max);
    const TileGeometry geom{cfg_.map.grid_h, cfg_.map.grid_w, cfg_.map.n_classes, cfg_.map.m_max};

    const std::uint64_t seq_base = transport_sequence_base_.value_or(step_counter_) * kSeqSlots;
    std::vector<double> ses_totals(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k) {
      const std::size_t ku = static_cast<std::size_t>(k);
      const double map_sinr = scheme_.common_stream ? sinr_c[ku] : sinr_p[ku];
      const double map_ber =
          injected_map_ber_.value_or(scheme_.send_map ? ber_from_sinr(map_sinr) : 0.0);
      const double text_ber =
          injected_text_ber_.value_or(scheme_.send_text ? ber_from_sinr(sinr_p[ku]) : 0.0);
      out.ber_common[ku] = map_ber;
      out.ber_private[ku] = text_ber;

      DecodedArtifacts artifacts;
      artifacts.n_max = cfg_.text.n_max;

      DecodedMap received_map;
      if (scheme_.send_map && budget.n_c > 0) {
        Bitstream noisy = map_bits;
        out.map_bits_flipped +=
            transmit_bits_inplace(noisy, map_ber, seed_, seq_base + 2 * ku);
        out.map_bits_sent += static_cast<long long>(noisy.size());
        received_map = scheme_.binary_map_codec ? label_binary_decode(noisy, geom)
                                                : onehot_decode(noisy, geom);
        artifacts.source_map = &source_map_;
        artifacts.received_map = &received_map;
        out.rho_common[ku] = empirical_common_fraction(source_map_, received_map, cfg_.map.m_max);
      }

      std::vector<std::string> received_words;
      if (scheme_.send_text && budget.n_p[ku] > 0) {
        const TextUnit prompt{cfg_.text.prompts[ku]};
        const int units = budget.n_p[ku];
        Bitstream noisy = text_encode(prompt, units);
        out.text_bits_flipped +=
            transmit_bits_inplace(noisy, text_ber, seed_, seq_base + 2 * ku + 1);
        out.text_bits_sent += static_cast<long long>(noisy.size());
        received_words = text_decode_words(noisy, text_geometry(prompt, units));
        if (cfg_.text.spell_correction)
          for (auto& w : received_words) w = spell_correct_word(w, cfg_.text.dictionary);
        artifacts.source_words = &prompt_words_[ku];
        artifacts.received_words = &received_words;
        out.rho_private[ku] =
            empirical_private_fraction(prompt_words_[ku], received_words, cfg_.text.n_max);
      }

      out.per_user_ses[ku] = evaluator_->evaluate(artifacts);
      ses_totals[ku] = out.per_user_ses[ku].total;
    }

    const RewardBreakdown rb = compute_reward(ses_totals, out.power_used, cfg_);
    out.reward = rb.reward;
    out.power_slack = cfg_.p_max_watts - out.power_used;
    out.ses_slacks.resize(static_cast<std::size_t>(k_users));
    for (int k = 0; k < k_users; ++k)
      out.ses_slacks[static_cast<std::size_t>(k)] =
          ses_totals[static_cast<std::size_t>(k)] - cfg_.ses_thresholds[static_cast<std::size_t>(k)];

    ++step_counter_;
    if (cfg_.redraw_channels_each_step || step_counter_ % cfg_.steps_per_episode == 0)
      channels_ = draw_channels(cfg_.distances_m, cfg_.n_tx_antennas, cfg_.path_loss, seed_,
                                channel_sequence_++);
    out.next_state = encode_state(channels_, cfg_);
    return out;
  }

 private:
  // Transport sequence slots per step: 2 streams x users (kSeqSlots / 2 max).
  static constexpr std::uint64_t kSeqSlots = 64;

  EnvConfig cfg_;
  SchemeFlags scheme_;
  std::uint64_t seed_;
  std::uint64_t step_counter_ = 0;
  std::uint64_t channel_sequence_ = 0;
  SemanticMap source_map_;
  std::vector<double> class_probs_;
  std::vector<std::vector<std::string>> prompt_words_;
  std::unique_ptr<SurrogateSesEvaluator> evaluator_;
  ChannelSet channels_;
  std::optional<double> injected_map_ber_;
  std::optional<double> injected_text_ber_;
  std::optional<std::uint64_t> transport_sequence_base_;
};

}  // namespace semsplit

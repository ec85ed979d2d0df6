#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "semsplit/semcodec.hpp"

namespace semsplit {

// ---------------------------------------------------------------------------
// Score formulas over supplied vectors / feature stacks
// ---------------------------------------------------------------------------

struct Embedding {
  std::vector<double> values;
};

/// Cosine similarity rescaled from [-1, 1] to [0, 1].
inline double clip_score(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("clip_score: embedding length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (!(na > 0.0) || !(nb > 0.0))
    throw std::domain_error("clip_score: zero-norm embedding");
  const double cosine = dot / (std::sqrt(na) * std::sqrt(nb));
  return (cosine + 1.0) / 2.0;
}

/// One perceptual layer: paired feature maps stored row-major as
/// [h][w][channel], plus per-channel weights.
struct FeatureLayer {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> reference;
  std::vector<double> distorted;
  std::vector<double> channel_weights;
};

struct FeatureStack {
  std::vector<FeatureLayer> layers;
};

/// sum_l (1 / (H_l W_l)) sum_{h,w} || eta_l .* (y - y_hat) ||_2^2
inline double lpips_score(const FeatureStack& s) {
  double total = 0.0;
  for (const auto& layer : s.layers) {
    if (layer.height < 1 || layer.width < 1 || layer.channels < 1)
      throw std::invalid_argument("lpips_score: empty layer");
    const std::size_t n =
        static_cast<std::size_t>(layer.height) * layer.width * layer.channels;
    if (layer.reference.size() != n || layer.distorted.size() != n)
      throw std::invalid_argument("lpips_score: feature map size mismatch");
    if (layer.channel_weights.size() != static_cast<std::size_t>(layer.channels))
      throw std::invalid_argument("lpips_score: channel weight size mismatch");
    double layer_sum = 0.0;
    std::size_t idx = 0;
    for (int h = 0; h < layer.height; ++h) {
      for (int w = 0; w < layer.width; ++w) {
        for (int c = 0; c < layer.channels; ++c, ++idx) {
          const double d =
              layer.channel_weights[static_cast<std::size_t>(c)] *
              (layer.reference[idx] - layer.distorted[idx]);
          layer_sum += d * d;
        }
      }
    }
    total += layer_sum / (static_cast<double>(layer.height) * layer.width);
  }
  return total;
}

// ---------------------------------------------------------------------------
// SES score and the deterministic surrogate evaluator
// ---------------------------------------------------------------------------

/// Per-user semantic efficiency score; total = clip_part + (1 - lpips_part).
struct SesScore {
  double clip_part = 0.0;
  double lpips_part = 0.0;
  double total = 1.0;
};

inline SesScore make_ses(double clip_part, double lpips_part) {
  return SesScore{clip_part, lpips_part, clip_part + 1.0 - lpips_part};
}

/// Closed-form stand-in for the generation-and-scoring pipeline: maps the
/// delivered common/private fractions to a SES that is monotone
/// nondecreasing in both.
struct SurrogateParams {
  double w_img = 0.6;
  double w_txt = 0.4;
  double clip_floor = 0.5;
  double lpips_max = 0.8;
  double lpips_min = 0.1;
  double decay_b = 3.0;

  void validate() const {
    if (!(w_img >= 0.0) || !(w_txt >= 0.0) || std::abs(w_img + w_txt - 1.0) > 1e-12)
      throw std::invalid_argument("SurrogateParams: weights must be nonnegative and sum to 1");
    if (!(clip_floor >= 0.0) || !(clip_floor <= 1.0))
      throw std::invalid_argument("SurrogateParams: clip_floor out of [0,1]");
    if (!(lpips_min >= 0.0) || !(lpips_min < lpips_max) || !(lpips_max <= 1.0))
      throw std::invalid_argument("SurrogateParams: need 0 <= lpips_min < lpips_max <= 1");
    if (!(decay_b > 0.0)) throw std::invalid_argument("SurrogateParams: decay_b must be positive");
  }
};

inline SesScore surrogate_ses(double rho_c, double rho_p, const SurrogateParams& p) {
  if (!(rho_c >= 0.0) || !(rho_c <= 1.0) || !(rho_p >= 0.0) || !(rho_p <= 1.0))
    throw std::domain_error("surrogate_ses: fractions must lie in [0,1]");
  const double mix = p.w_img * rho_c + p.w_txt * rho_p;
  const double clip_part = p.clip_floor + (1.0 - p.clip_floor) * mix;
  const double lpips_part = p.lpips_min + (p.lpips_max - p.lpips_min) * std::exp(-p.decay_b * mix);
  return make_ses(clip_part, lpips_part);
}

// ---------------------------------------------------------------------------
// Delivered-fraction model linking codecs and channel quality to the SES
// ---------------------------------------------------------------------------

/// Static codec facts needed to turn budgets and BERs into fractions.
struct CodecGeometry {
  int m_max = 0;
  int n_classes = 0;
  std::vector<double> class_probs;
  int n_max = 0;
  double avg_word_len = 0.0;
};

struct DeliveredFractions {
  double rho_c = 0.0;
  double rho_p = 0.0;
};

/// rho_c = (n_c / M) * P_cell_correct(ber_c); rho_p = (n_p / N) * P(word
/// survives) with a word modeled as 8 * avg_word_len independent bits.
inline DeliveredFractions delivered_fractions(int n_c, int n_p, double ber_c, double ber_p,
                                              const CodecGeometry& g) {
  if (g.m_max < 1 || g.n_max < 1)
    throw std::invalid_argument("delivered_fractions: invalid geometry");
  if (n_c < 0 || n_c > g.m_max || n_p < 0 || n_p > g.n_max)
    throw std::invalid_argument("delivered_fractions: budget out of range");
  if (!(ber_c >= 0.0) || !(ber_c <= 1.0) || !(ber_p >= 0.0) || !(ber_p <= 1.0))
    throw std::domain_error("delivered_fractions: BER out of range");
  DeliveredFractions out;
  out.rho_c = n_c == 0 ? 0.0
                       : (static_cast<double>(n_c) / g.m_max) *
                             cell_success_probability(ber_c, g.n_classes, g.class_probs);
  out.rho_p = n_p == 0 ? 0.0
                       : (static_cast<double>(n_p) / g.n_max) *
                             std::pow(1.0 - ber_p, 8.0 * g.avg_word_len);
  return out;
}

inline std::vector<DeliveredFractions> delivered_fractions(const SemanticBudget& budget,
                                                           const std::vector<double>& ber_c,
                                                           const std::vector<double>& ber_p,
                                                           const CodecGeometry& g) {
  if (ber_c.size() != budget.n_p.size() || ber_p.size() != budget.n_p.size())
    throw std::invalid_argument("delivered_fractions: per-user BER size mismatch");
  std::vector<DeliveredFractions> out(budget.n_p.size());
  for (std::size_t k = 0; k < budget.n_p.size(); ++k)
    out[k] = delivered_fractions(budget.n_c, budget.n_p[k], ber_c[k], ber_p[k], g);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluator interface over decoded artifacts
// ---------------------------------------------------------------------------

/// What one user actually received after decoding, next to the ground truth.
struct DecodedArtifacts {
  const SemanticMap* source_map = nullptr;
  const DecodedMap* received_map = nullptr;
  const std::vector<std::string>* source_words = nullptr;
  const std::vector<std::string>* received_words = nullptr;
  int n_max = 0;
};

/// Fraction of all map cells delivered with the correct label; cells of
/// untransmitted tiles count as lost.
inline double empirical_common_fraction(const SemanticMap& source, const DecodedMap& received,
                                        int m_max) {
  if (source.cell_count() != received.map.cell_count())
    throw std::invalid_argument("empirical_common_fraction: map size mismatch");
  if (static_cast<int>(received.tile_present.size()) != m_max)
    throw std::invalid_argument("empirical_common_fraction: tile flag size mismatch");
  const int cells_per_tile = source.cell_count() / m_max;
  long long correct = 0;
  for (int t = 0; t < m_max; ++t) {
    if (!received.tile_present[static_cast<std::size_t>(t)]) continue;
    const int begin = t * cells_per_tile;
    for (int i = begin; i < begin + cells_per_tile; ++i)
      if (source.cells[static_cast<std::size_t>(i)] == received.map.cells[static_cast<std::size_t>(i)])
        ++correct;
  }
  return static_cast<double>(correct) / source.cell_count();
}

/// Fraction of the N-word private budget delivered verbatim.
inline double empirical_private_fraction(const std::vector<std::string>& source_words,
                                         const std::vector<std::string>& received_words,
                                         int n_max) {
  if (n_max < 1) throw std::invalid_argument("empirical_private_fraction: n_max must be >= 1");
  if (received_words.size() > source_words.size())
    throw std::invalid_argument("empirical_private_fraction: more words received than sent");
  int delivered = 0;
  for (std::size_t i = 0; i < received_words.size(); ++i)
    if (received_words[i] == source_words[i]) ++delivered;
  return static_cast<double>(delivered) / n_max;
}

/// Swappable map from decoded artifacts to a SES score. The surrogate is the
/// default; an adapter to neural scorers can implement the same contract.
class SesEvaluator {
 public:
  virtual ~SesEvaluator() = default;
  virtual SesScore evaluate(const DecodedArtifacts& artifacts) const = 0;
};

class SurrogateSesEvaluator final : public SesEvaluator {
 public:
  SurrogateSesEvaluator(SurrogateParams params, int m_max) : params_(params), m_max_(m_max) {
    params_.validate();
  }

  SesScore evaluate(const DecodedArtifacts& a) const override {
    double rho_c = 0.0;
    if (a.source_map && a.received_map)
      rho_c = empirical_common_fraction(*a.source_map, *a.received_map, m_max_);
    double rho_p = 0.0;
    if (a.source_words && a.received_words)
      rho_p = empirical_private_fraction(*a.source_words, *a.received_words, a.n_max);
    return surrogate_ses(rho_c, rho_p, params_);
  }

  const SurrogateParams& params() const { return params_; }

 private:
  SurrogateParams params_;
  int m_max_;
};

}  // namespace semsplit

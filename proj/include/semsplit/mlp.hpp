#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "semsplit/rng.hpp"

namespace semsplit {

enum class Activation { kTanh, kLinear };

/// Fully connected network parameters. Weights are row-major (rows = outputs).
/// Actors additionally carry a state-independent log standard deviation.
struct MlpParams {
  struct Layer {
    int rows = 0;
    int cols = 0;
    std::vector<double> weights;  // rows * cols
    std::vector<double> bias;     // rows
    Activation activation = Activation::kLinear;
  };

  std::vector<Layer> layers;
  std::vector<double> log_std;

  int input_dim() const { return layers.empty() ? 0 : layers.front().cols; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().rows; }

  void validate() const {
    if (layers.empty()) throw std::invalid_argument("MlpParams: no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& layer = layers[l];
      if (layer.rows < 1 || layer.cols < 1)
        throw std::invalid_argument("MlpParams: empty layer");
      if (layer.weights.size() != static_cast<std::size_t>(layer.rows) * layer.cols ||
          layer.bias.size() != static_cast<std::size_t>(layer.rows))
        throw std::invalid_argument("MlpParams: weight/bias shape mismatch");
      if (l > 0 && layers[l - 1].rows != layer.cols)
        throw std::invalid_argument("MlpParams: consecutive layer dimensions do not chain");
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = log_std.size();
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }
};

/// Xavier-uniform initialization, deterministic in (seed, sequence). The
/// final layer is scaled by output_gain (near-zero for policy heads, so the
/// initial policy is centered rather than random).
inline MlpParams make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                          std::uint64_t seed, std::uint64_t sequence, bool with_log_std = false,
                          double log_std_init = -0.5, double output_gain = 1.0) {
  if (input_dim < 1 || output_dim < 1)
    throw std::invalid_argument("make_mlp: invalid dimensions");
  PhiloxRng rng(seed, RngStream::kInit, sequence);
  MlpParams p;
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("make_mlp: invalid hidden width");
    dims.push_back(h);
  }
  dims.push_back(output_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    MlpParams::Layer layer;
    layer.cols = dims[l];
    layer.rows = dims[l + 1];
    layer.activation = (l + 2 == dims.size()) ? Activation::kLinear : Activation::kTanh;
    const bool last = (l + 2 == dims.size());
    const double limit = std::sqrt(6.0 / (layer.rows + layer.cols)) * (last ? output_gain : 1.0);
    layer.weights.resize(static_cast<std::size_t>(layer.rows) * layer.cols);
    for (auto& w : layer.weights) w = (2.0 * rng.next_double() - 1.0) * limit;
    layer.bias.assign(static_cast<std::size_t>(layer.rows), 0.0);
    p.layers.push_back(std::move(layer));
  }
  if (with_log_std) p.log_std.assign(static_cast<std::size_t>(output_dim), log_std_init);
  return p;
}

/// Per-layer activations cached by the forward pass for reuse in backward.
struct MlpCache {
  std::vector<std::vector<double>> pre;   // affine outputs per layer
  std::vector<std::vector<double>> post;  // activated outputs per layer
};

inline std::vector<double> mlp_forward_cached(const MlpParams& p, std::span<const double> x,
                                              MlpCache& cache) {
  if (static_cast<int>(x.size()) != p.input_dim())
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  cache.pre.assign(p.layers.size(), {});
  cache.post.assign(p.layers.size(), {});
  std::vector<double> cur(x.begin(), x.end());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    std::vector<double> next(static_cast<std::size_t>(layer.rows));
    for (int r = 0; r < layer.rows; ++r) {
      const double* wrow = layer.weights.data() + static_cast<std::size_t>(r) * layer.cols;
      double acc = layer.bias[static_cast<std::size_t>(r)];
      for (int c = 0; c < layer.cols; ++c) acc += wrow[c] * cur[static_cast<std::size_t>(c)];
      next[static_cast<std::size_t>(r)] = acc;
    }
    cache.pre[l] = next;
    if (layer.activation == Activation::kTanh)
      for (auto& v : next) v = std::tanh(v);
    cache.post[l] = next;
    cur = std::move(next);
  }
  return cur;
}

inline std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> x) {
  MlpCache cache;
  return mlp_forward_cached(p, x, cache);
}

/// Gradient accumulator shaped like the parameters.
struct MlpGrads {
  struct Layer {
    std::vector<double> weights;
    std::vector<double> bias;
  };
  std::vector<Layer> layers;
  std::vector<double> log_std;

  explicit MlpGrads(const MlpParams& p) { reset(p); }

  void reset(const MlpParams& p) {
    layers.assign(p.layers.size(), {});
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      layers[l].weights.assign(p.layers[l].weights.size(), 0.0);
      layers[l].bias.assign(p.layers[l].bias.size(), 0.0);
    }
    log_std.assign(p.log_std.size(), 0.0);
  }

  void scale(double s) {
    for (auto& l : layers) {
      for (auto& w : l.weights) w *= s;
      for (auto& b : l.bias) b *= s;
    }
    for (auto& g : log_std) g *= s;
  }

  double squared_norm() const {
    double acc = 0.0;
    for (const auto& l : layers) {
      for (double w : l.weights) acc += w * w;
      for (double b : l.bias) acc += b * b;
    }
    for (double g : log_std) acc += g * g;
    return acc;
  }
};

/// Exact reverse-mode gradients of (upstream . output) w.r.t. all layer
/// parameters; accumulates into `grads` and returns the input gradient.
inline std::vector<double> mlp_backward(const MlpParams& p, const MlpCache& cache,
                                        std::span<const double> x,
                                        std::span<const double> upstream, MlpGrads& grads) {
  if (cache.pre.size() != p.layers.size())
    throw std::invalid_argument("mlp_backward: cache does not match forward pass");
  if (static_cast<int>(upstream.size()) != p.output_dim())
    throw std::invalid_argument("mlp_backward: upstream dimension mismatch");
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const auto& layer = p.layers[li];
    if (layer.activation == Activation::kTanh) {
      const auto& post = cache.post[li];
      for (int r = 0; r < layer.rows; ++r)
        delta[static_cast<std::size_t>(r)] *= 1.0 - post[static_cast<std::size_t>(r)] * post[static_cast<std::size_t>(r)];
    }
    const std::span<const double> input_vals =
        li == 0 ? x : std::span<const double>(cache.post[li - 1]);
    auto& glayer = grads.layers[li];
    std::vector<double> prev_delta(static_cast<std::size_t>(layer.cols), 0.0);
    for (int r = 0; r < layer.rows; ++r) {
      const double d = delta[static_cast<std::size_t>(r)];
      glayer.bias[static_cast<std::size_t>(r)] += d;
      double* gw = glayer.weights.data() + static_cast<std::size_t>(r) * layer.cols;
      const double* wrow = layer.weights.data() + static_cast<std::size_t>(r) * layer.cols;
      for (int c = 0; c < layer.cols; ++c) {
        gw[c] += d * input_vals[static_cast<std::size_t>(c)];
        prev_delta[static_cast<std::size_t>(c)] += d * wrow[c];
      }
    }
    delta = std::move(prev_delta);
  }
  return delta;
}

/// Scales gradients so their global L2 norm does not exceed max_norm.
inline void clip_grad_norm(MlpGrads& grads, double max_norm) {
  if (!(max_norm > 0.0)) return;
  const double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm) grads.scale(max_norm / norm);
}

/// Adam with bias correction, operating over the structured parameters.
/// The log-std group may use its own learning rate.
class AdamOptimizer {
 public:
  AdamOptimizer(const MlpParams& p, double lr, double lr_log_std = -1.0, double weight_decay = 0.0,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr),
        lr_log_std_(lr_log_std < 0.0 ? lr : lr_log_std),
        weight_decay_(weight_decay),
        beta1_(beta1),
        beta2_(beta2),
        eps_(eps),
        m_(p),
        v_(p) {}

  /// Applies one descent step (pass negated gradients to ascend). Decoupled
  /// weight decay touches layer weights only, not biases or log-std.
  void step(MlpParams& p, const MlpGrads& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      if (weight_decay_ > 0.0)
        for (auto& w : p.layers[l].weights) w -= lr_ * weight_decay_ * w;
      update(p.layers[l].weights, grads.layers[l].weights, m_.layers[l].weights,
             v_.layers[l].weights, bc1, bc2, lr_);
      update(p.layers[l].bias, grads.layers[l].bias, m_.layers[l].bias, v_.layers[l].bias, bc1,
             bc2, lr_);
    }
    update(p.log_std, grads.log_std, m_.log_std, v_.log_std, bc1, bc2, lr_log_std_);
  }

 private:
  void update(std::vector<double>& param, const std::vector<double>& grad, std::vector<double>& m,
              std::vector<double>& v, double bc1, double bc2, double lr) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
      param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
    }
  }

  double lr_, lr_log_std_, weight_decay_, beta1_, beta2_, eps_;
  long long t_ = 0;
  MlpGrads m_, v_;
};

}  // namespace semsplit

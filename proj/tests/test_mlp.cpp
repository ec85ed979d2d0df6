#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "semsplit/mlp.hpp"
#include "semsplit/rng.hpp"

using namespace semsplit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MlpParams identity_net(int dim) {
  MlpParams p;
  MlpParams::Layer layer;
  layer.rows = dim;
  layer.cols = dim;
  layer.weights.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) layer.weights[static_cast<std::size_t>(i) * dim + i] = 1.0;
  layer.bias.assign(static_cast<std::size_t>(dim), 0.0);
  layer.activation = Activation::kLinear;
  p.layers.push_back(layer);
  return p;
}

// Applies f to every parameter slot of the network in a fixed order.
void for_each_param(MlpParams& p, const std::function<void(double&)>& f) {
  for (auto& layer : p.layers) {
    for (auto& w : layer.weights) f(w);
    for (auto& b : layer.bias) f(b);
  }
  for (auto& v : p.log_std) f(v);
}

std::vector<double*> param_slots(MlpParams& p) {
  std::vector<double*> slots;
  for_each_param(p, [&](double& v) { slots.push_back(&v); });
  return slots;
}

std::vector<double> grad_values(const MlpGrads& g) {
  std::vector<double> out;
  for (const auto& layer : g.layers) {
    out.insert(out.end(), layer.weights.begin(), layer.weights.end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  out.insert(out.end(), g.log_std.begin(), g.log_std.end());
  return out;
}

}  // namespace

TEST_CASE("identity weights with linear activation reproduce the input") {
  const MlpParams p = identity_net(4);
  const std::vector<double> x{0.5, -1.0, 2.0, 0.0};
  CHECK(mlp_forward(p, x) == x);
}

TEST_CASE("single affine layer: [[2]] x + [1]") {
  MlpParams p;
  MlpParams::Layer layer;
  layer.rows = 1;
  layer.cols = 1;
  layer.weights = {2.0};
  layer.bias = {1.0};
  layer.activation = Activation::kLinear;
  p.layers.push_back(layer);
  const std::vector<double> y = mlp_forward(p, std::vector<double>{3.0});
  CHECK_THAT(y[0], WithinRel(7.0, 1e-15));
}

TEST_CASE("forward pass matches a naive matrix-multiply oracle") {
  const MlpParams p = make_mlp(5, {7, 6}, 3, 21, 0);
  PhiloxRng rng(22, RngStream::kInit);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.next_normal();

    std::vector<double> cur = x;
    for (const auto& layer : p.layers) {
      std::vector<double> next(static_cast<std::size_t>(layer.rows), 0.0);
      for (int r = 0; r < layer.rows; ++r) {
        double acc = layer.bias[static_cast<std::size_t>(r)];
        for (int c = 0; c < layer.cols; ++c)
          acc += layer.weights[static_cast<std::size_t>(r) * layer.cols + c] *
                 cur[static_cast<std::size_t>(c)];
        next[static_cast<std::size_t>(r)] =
            layer.activation == Activation::kTanh ? std::tanh(acc) : acc;
      }
      cur = next;
    }
    const std::vector<double> y = mlp_forward(p, x);
    for (int i = 0; i < 3; ++i) CHECK_THAT(y[i], WithinAbs(cur[i], 1e-12));
  }
}

TEST_CASE("mlp dimension mismatches are rejected") {
  const MlpParams p = make_mlp(5, {4}, 2, 1, 0);
  CHECK_THROWS_AS(mlp_forward(p, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("linear single layer: dL/dW equals upstream outer product with x") {
  MlpParams p;
  MlpParams::Layer layer;
  layer.rows = 2;
  layer.cols = 3;
  layer.weights = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  layer.bias = {0.0, 0.0};
  layer.activation = Activation::kLinear;
  p.layers.push_back(layer);

  const std::vector<double> x{1.0, -2.0, 3.0};
  const std::vector<double> upstream{2.0, -1.0};
  MlpCache cache;
  mlp_forward_cached(p, x, cache);
  MlpGrads grads(p);
  const std::vector<double> input_grad = mlp_backward(p, cache, x, upstream, grads);

  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c)
      CHECK_THAT(grads.layers[0].weights[static_cast<std::size_t>(r) * 3 + c],
                 WithinAbs(upstream[static_cast<std::size_t>(r)] * x[static_cast<std::size_t>(c)], 1e-14));
  CHECK_THAT(grads.layers[0].bias[0], WithinAbs(2.0, 1e-14));
  CHECK_THAT(grads.layers[0].bias[1], WithinAbs(-1.0, 1e-14));
  // Input gradient is W^T upstream.
  for (int c = 0; c < 3; ++c) {
    double expected = 0.0;
    for (int r = 0; r < 2; ++r)
      expected += layer.weights[static_cast<std::size_t>(r) * 3 + c] * upstream[static_cast<std::size_t>(r)];
    CHECK_THAT(input_grad[static_cast<std::size_t>(c)], WithinAbs(expected, 1e-14));
  }
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  const MlpParams p = make_mlp(4, {5}, 3, 77, 0);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  MlpCache cache;
  mlp_forward_cached(p, x, cache);
  MlpGrads grads(p);
  mlp_backward(p, cache, x, std::vector<double>{0.0, 0.0, 0.0}, grads);
  CHECK(grads.squared_norm() == 0.0);
}

TEST_CASE("backward pass matches central finite differences on every parameter") {
  // Scalar loss: sum of outputs weighted by fixed coefficients.
  MlpParams p = make_mlp(4, {6, 5}, 3, 555, 0);
  PhiloxRng rng(556, RngStream::kInit);
  std::vector<double> x(4);
  for (auto& v : x) v = rng.next_normal();
  const std::vector<double> coeff{1.0, -2.0, 0.5};

  auto loss = [&](MlpParams& net) {
    const std::vector<double> y = mlp_forward(net, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += coeff[i] * y[i];
    return acc;
  };

  MlpCache cache;
  mlp_forward_cached(p, x, cache);
  MlpGrads grads(p);
  mlp_backward(p, cache, x, coeff, grads);
  const std::vector<double> analytic = grad_values(grads);

  const double h = 1e-5;
  const std::vector<double*> slots = param_slots(p);
  REQUIRE(analytic.size() == slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double saved = *slots[i];
    *slots[i] = saved + h;
    const double up = loss(p);
    *slots[i] = saved - h;
    const double down = loss(p);
    *slots[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
    REQUIRE(std::abs(fd - analytic[i]) / denom < 1e-4);
  }
}

TEST_CASE("make_mlp is deterministic and shapes chain") {
  const MlpParams a = make_mlp(10, {16, 16}, 4, 99, 3, true, -0.7);
  const MlpParams b = make_mlp(10, {16, 16}, 4, 99, 3, true, -0.7);
  REQUIRE(a.layers.size() == 3);
  a.validate();
  CHECK(a.input_dim() == 10);
  CHECK(a.output_dim() == 4);
  CHECK(a.log_std == std::vector<double>(4, -0.7));
  for (std::size_t l = 0; l < a.layers.size(); ++l)
    CHECK(a.layers[l].weights == b.layers[l].weights);
}

TEST_CASE("gradient clipping rescales to the target norm") {
  MlpParams p = make_mlp(3, {4}, 2, 5, 0);
  MlpGrads g(p);
  for (auto& layer : g.layers) {
    for (auto& w : layer.weights) w = 3.0;
    for (auto& b : layer.bias) b = -3.0;
  }
  const double before = std::sqrt(g.squared_norm());
  REQUIRE(before > 1.0);
  clip_grad_norm(g, 1.0);
  CHECK_THAT(std::sqrt(g.squared_norm()), WithinRel(1.0, 1e-12));
  // Already-small gradients are untouched.
  clip_grad_norm(g, 10.0);
  CHECK_THAT(std::sqrt(g.squared_norm()), WithinRel(1.0, 1e-12));
}

TEST_CASE("adam descends a simple quadratic") {
  MlpParams p = identity_net(1);
  p.layers[0].weights[0] = 5.0;
  AdamOptimizer opt(p, 0.1);
  // Minimize (w - 2)^2 via gradient 2 (w - 2).
  for (int i = 0; i < 500; ++i) {
    MlpGrads g(p);
    g.layers[0].weights[0] = 2.0 * (p.layers[0].weights[0] - 2.0);
    opt.step(p, g);
  }
  CHECK_THAT(p.layers[0].weights[0], WithinAbs(2.0, 1e-3));
}

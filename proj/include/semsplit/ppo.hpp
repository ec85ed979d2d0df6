#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "semsplit/env.hpp"
#include "semsplit/mlp.hpp"
#include "semsplit/rng.hpp"

namespace semsplit {

struct PpoConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double clip_eps = 0.2;
  double lr_actor = 1e-3;
  double lr_critic = 3e-4;
  // The state-independent log-std vector carries the exploration schedule;
  // it learns on its own, faster rate so noise anneals within desk-scale runs.
  double lr_log_std = 1e-2;
  // Decoupled L2 decay on actor weights; keeps the squashed means out of the
  // flat tanh-saturation region where policy gradients vanish.
  double weight_decay_actor = 1e-3;
  int minibatch_size = 128;
  int buffer_capacity = 2048;
  int epochs_per_update = 10;
  int max_episodes = 2000;
  double grad_clip_actor = 0.5;
  double grad_clip_critic = 0.5;
  std::vector<int> hidden{128, 128};
  bool advantage_norm = true;
  double log_std_init = -0.5;
  double actor_output_gain = 0.01;
  double log_std_min = -5.0;
  double log_std_max = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(gamma > 0.0) || !(gamma <= 1.0))
      throw std::invalid_argument("PpoConfig: gamma must lie in (0, 1]");
    if (!(lam >= 0.0) || !(lam <= 1.0))
      throw std::invalid_argument("PpoConfig: lambda must lie in [0, 1]");
    if (!(clip_eps > 0.0)) throw std::invalid_argument("PpoConfig: clip_eps must be positive");
    if (minibatch_size < 1 || buffer_capacity < 1 || epochs_per_update < 1 || max_episodes < 1)
      throw std::invalid_argument("PpoConfig: sizes must be positive");
    if (hidden.empty()) throw std::invalid_argument("PpoConfig: need at least one hidden layer");
  }
};

/// One stored interaction, captured before any update touches the networks.
struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double log_prob_old = 0.0;
  double reward = 0.0;
  double value_estimate = 0.0;
  bool done = false;
};

// ---------------------------------------------------------------------------
// Advantage estimation and losses
// ---------------------------------------------------------------------------

/// Generalized advantage estimation by backward recursion:
/// A_t = delta_t + gamma * lam * (1 - done_t) * A_{t+1},
/// delta_t = r_t + gamma * (1 - done_t) * V(s_{t+1}) - V(s_t).
/// `values` holds T+1 entries, the last being the bootstrap V(s_T).
inline std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                               std::span<const std::uint8_t> dones, double gamma, double lam) {
  const std::size_t t_len = rewards.size();
  if (t_len == 0) throw std::invalid_argument("gae: empty trajectory");
  if (values.size() != t_len + 1)
    throw std::invalid_argument("gae: values must include the bootstrap V(s_T)");
  if (dones.size() != t_len) throw std::invalid_argument("gae: done flag count mismatch");
  std::vector<double> advantages(t_len);
  double carry = 0.0;
  for (std::size_t i = t_len; i-- > 0;) {
    const double mask = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * mask * values[i + 1] - values[i];
    carry = delta + gamma * lam * mask * carry;
    advantages[i] = carry;
  }
  return advantages;
}

/// Per-sample clipped surrogate: min(r * A, clip(r, 1-eps, 1+eps) * A) with
/// r = exp(log_prob_new - log_prob_old). The update maximizes its batch mean.
inline double clipped_surrogate(double log_prob_new, double log_prob_old, double advantage,
                                double eps) {
  const double ratio = std::exp(log_prob_new - log_prob_old);
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

/// Mean squared error between value predictions and targets.
inline double critic_loss(std::span<const double> values, std::span<const double> targets) {
  if (values.size() != targets.size() || values.empty())
    throw std::invalid_argument("critic_loss: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - targets[i];
    acc += d * d;
  }
  return acc / static_cast<double>(values.size());
}

// ---------------------------------------------------------------------------
// Diagonal Gaussian policy
// ---------------------------------------------------------------------------

/// Log density of a diagonal Gaussian with mean `mu` and log-std `log_std`.
inline double gaussian_log_prob(std::span<const double> action, std::span<const double> mu,
                                std::span<const double> log_std) {
  if (action.size() != mu.size() || mu.size() != log_std.size())
    throw std::invalid_argument("gaussian_log_prob: dimension mismatch");
  double acc = -0.5 * static_cast<double>(mu.size()) * std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double sigma = std::exp(log_std[i]);
    const double z = (action[i] - mu[i]) / sigma;
    acc += -0.5 * z * z - log_std[i];
  }
  return acc;
}

struct PolicySample {
  std::vector<double> action;
  double log_prob = 0.0;
};

/// a = mu(s) + sigma .* z with z standard normal; the stored action is the
/// raw Gaussian sample (squashing happens in the environment decoder).
inline PolicySample policy_sample(const MlpParams& actor, std::span<const double> state,
                                  PhiloxRng& rng) {
  if (actor.log_std.size() != static_cast<std::size_t>(actor.output_dim()))
    throw std::invalid_argument("policy_sample: actor has no log_std head");
  PolicySample out;
  const std::vector<double> mu = mlp_forward(actor, state);
  out.action.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    out.action[i] = mu[i] + std::exp(actor.log_std[i]) * rng.next_normal();
  out.log_prob = gaussian_log_prob(out.action, mu, actor.log_std);
  return out;
}

inline std::vector<double> policy_mean_action(const MlpParams& actor,
                                              std::span<const double> state) {
  return mlp_forward(actor, state);
}

// ---------------------------------------------------------------------------
// Batched losses with analytic gradients
// ---------------------------------------------------------------------------

struct ActorBatch {
  const std::vector<Transition>* transitions = nullptr;
  std::span<const std::size_t> indices;
  std::span<const double> advantages;  // indexed by buffer position
};

/// Mean clipped-surrogate objective over a minibatch, with exact gradients
/// through the Gaussian log-density. Returns the objective (to maximize);
/// gradients in `grads` are of the NEGATED objective, ready for descent.
inline double actor_loss_and_grads(const MlpParams& actor, const ActorBatch& batch,
                                   double clip_eps, MlpGrads& grads) {
  grads.reset(actor);
  const auto& transitions = *batch.transitions;
  const double batch_size = static_cast<double>(batch.indices.size());
  if (batch.indices.empty()) throw std::invalid_argument("actor_loss_and_grads: empty batch");
  double objective = 0.0;
  MlpCache cache;
  std::vector<double> upstream(static_cast<std::size_t>(actor.output_dim()));
  for (std::size_t idx : batch.indices) {
    const Transition& tr = transitions[idx];
    const double advantage = batch.advantages[idx];
    const std::vector<double> mu = mlp_forward_cached(actor, tr.state, cache);
    const double logp_new = gaussian_log_prob(tr.action, mu, actor.log_std);
    const double ratio = std::exp(logp_new - tr.log_prob_old);
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    const double unclipped_term = ratio * advantage;
    const double clipped_term = clipped * advantage;
    objective += std::min(unclipped_term, clipped_term);
    // The clipped branch is constant in theta; only the unclipped branch
    // propagates gradient, and only when it attains the min.
    if (unclipped_term <= clipped_term) {
      const double dobj_dlogp = advantage * ratio;  // d(r*A)/dlogp_new
      const double coeff = -dobj_dlogp / batch_size;  // negate: descend on -objective
      for (std::size_t d = 0; d < mu.size(); ++d) {
        const double sigma = std::exp(actor.log_std[d]);
        const double z = (tr.action[d] - mu[d]) / sigma;
        upstream[d] = coeff * (z / sigma);            // dlogp/dmu_d
        grads.log_std[d] += coeff * (z * z - 1.0);    // dlogp/dlog_std_d
      }
      mlp_backward(actor, cache, tr.state, upstream, grads);
    }
  }
  return objective / batch_size;
}

struct CriticBatch {
  const std::vector<Transition>* transitions = nullptr;
  std::span<const std::size_t> indices;
  std::span<const double> targets;  // indexed by buffer position
};

/// Mean squared error over a minibatch with gradients for descent.
inline double critic_loss_and_grads(const MlpParams& critic, const CriticBatch& batch,
                                    MlpGrads& grads) {
  grads.reset(critic);
  const auto& transitions = *batch.transitions;
  if (batch.indices.empty()) throw std::invalid_argument("critic_loss_and_grads: empty batch");
  const double batch_size = static_cast<double>(batch.indices.size());
  double loss = 0.0;
  MlpCache cache;
  for (std::size_t idx : batch.indices) {
    const Transition& tr = transitions[idx];
    const std::vector<double> v = mlp_forward_cached(critic, tr.state, cache);
    const double diff = v[0] - batch.targets[idx];
    loss += diff * diff;
    const double upstream[1] = {2.0 * diff / batch_size};
    mlp_backward(critic, cache, tr.state, upstream, grads);
  }
  return loss / batch_size;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpisodeStats {
  int episode = 0;
  double mean_reward = 0.0;
  std::vector<double> mean_ses;  // per user
  double power_violation_rate = 0.0;
  double ses_violation_rate = 0.0;
  std::vector<double> mean_ber_common;
  std::vector<double> mean_ber_private;
};

struct TrainResult {
  std::vector<EpisodeStats> episodes;
  MlpParams actor;
  MlpParams critic;
  long long transitions_collected = 0;
  int updates_done = 0;
};

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& indices, PhiloxRng& rng) {
  for (std::size_t i = indices.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_double() * static_cast<double>(i));
    std::swap(indices[i - 1], indices[j]);
  }
}

inline void ppo_update(std::vector<Transition>& buffer, const StateVector& bootstrap_state,
                       MlpParams& actor, MlpParams& critic, AdamOptimizer& actor_opt,
                       AdamOptimizer& critic_opt, const PpoConfig& cfg, PhiloxRng& shuffle_rng) {
  const std::size_t n = buffer.size();
  std::vector<double> rewards(n), values(n + 1);
  std::vector<std::uint8_t> dones(n);
  for (std::size_t i = 0; i < n; ++i) {
    rewards[i] = buffer[i].reward;
    values[i] = buffer[i].value_estimate;
    dones[i] = buffer[i].done ? 1u : 0u;
  }
  values[n] = mlp_forward(critic, bootstrap_state)[0];

  std::vector<double> advantages = gae(rewards, values, dones, cfg.gamma, cfg.lam);
  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = advantages[i] + values[i];

  if (cfg.advantage_norm) {
    double mean = 0.0;
    for (double a : advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / (std::sqrt(var) + 1e-8);
    for (auto& a : advantages) a = (a - mean) * inv_std;
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  MlpGrads actor_grads(actor), critic_grads(critic);
  for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
    shuffle_indices(order, shuffle_rng);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.minibatch_size));
      const std::span<const std::size_t> mb(order.data() + start, end - start);

      actor_loss_and_grads(actor, ActorBatch{&buffer, mb, advantages}, cfg.clip_eps, actor_grads);
      clip_grad_norm(actor_grads, cfg.grad_clip_actor);
      actor_opt.step(actor, actor_grads);
      for (auto& ls : actor.log_std) ls = std::clamp(ls, cfg.log_std_min, cfg.log_std_max);

      critic_loss_and_grads(critic, CriticBatch{&buffer, mb, targets}, critic_grads);
      clip_grad_norm(critic_grads, cfg.grad_clip_critic);
      critic_opt.step(critic, critic_grads);
    }
  }
  buffer.clear();  // on-policy contract
}

}  // namespace detail

/// Collect-then-update PPO over the environment's episode/step loop.
/// Deterministic in (cfg.seed, env seed): replays identically.
inline TrainResult train(Environment& env, const PpoConfig& cfg) {
  cfg.validate();
  const int state_dim = env.state_dim();
  const int action_dim = env.action_dim();
  TrainResult result;
  result.actor = make_mlp(state_dim, cfg.hidden, action_dim, cfg.seed, 0, true,
                          cfg.log_std_init, cfg.actor_output_gain);
  result.critic = make_mlp(state_dim, cfg.hidden, 1, cfg.seed, 1);
  AdamOptimizer actor_opt(result.actor, cfg.lr_actor, cfg.lr_log_std, cfg.weight_decay_actor);
  AdamOptimizer critic_opt(result.critic, cfg.lr_critic);
  PhiloxRng policy_rng(cfg.seed, RngStream::kPolicy);
  PhiloxRng shuffle_rng(cfg.seed, RngStream::kShuffle);

  std::vector<Transition> buffer;
  buffer.reserve(static_cast<std::size_t>(cfg.buffer_capacity));

  const int steps = env.config().steps_per_episode;
  const int k_users = env.config().n_users;
  StateVector state = env.reset();
  for (int episode = 0; episode < cfg.max_episodes; ++episode) {
    EpisodeStats stats;
    stats.episode = episode;
    stats.mean_ses.assign(static_cast<std::size_t>(k_users), 0.0);
    stats.mean_ber_common.assign(static_cast<std::size_t>(k_users), 0.0);
    stats.mean_ber_private.assign(static_cast<std::size_t>(k_users), 0.0);
    int power_violations = 0;
    int ses_violations = 0;
    for (int step = 0; step < steps; ++step) {
      PolicySample sample = policy_sample(result.actor, state, policy_rng);
      const double value = mlp_forward(result.critic, state)[0];
      StepOutcome out = env.step(sample.action);
      const bool done = (step + 1 == steps);

      Transition tr;
      tr.state = state;
      tr.action = std::move(sample.action);
      tr.log_prob_old = sample.log_prob;
      tr.reward = out.reward;
      tr.value_estimate = value;
      tr.done = done;
      buffer.push_back(std::move(tr));
      ++result.transitions_collected;

      stats.mean_reward += out.reward;
      for (int k = 0; k < k_users; ++k) {
        stats.mean_ses[static_cast<std::size_t>(k)] +=
            out.per_user_ses[static_cast<std::size_t>(k)].total;
        stats.mean_ber_common[static_cast<std::size_t>(k)] +=
            out.ber_common[static_cast<std::size_t>(k)];
        stats.mean_ber_private[static_cast<std::size_t>(k)] +=
            out.ber_private[static_cast<std::size_t>(k)];
      }
      if (out.power_slack < 0.0) ++power_violations;
      for (double slack : out.ses_slacks)
        if (slack < 0.0) {
          ++ses_violations;
          break;
        }

      state = out.next_state;
      if (static_cast<int>(buffer.size()) == cfg.buffer_capacity) {
        detail::ppo_update(buffer, state, result.actor, result.critic, actor_opt, critic_opt, cfg,
                           shuffle_rng);
        ++result.updates_done;
      }
    }
    const double inv_steps = 1.0 / static_cast<double>(steps);
    stats.mean_reward *= inv_steps;
    for (auto& v : stats.mean_ses) v *= inv_steps;
    for (auto& v : stats.mean_ber_common) v *= inv_steps;
    for (auto& v : stats.mean_ber_private) v *= inv_steps;
    stats.power_violation_rate = power_violations * inv_steps;
    stats.ses_violation_rate = ses_violations * inv_steps;
    result.episodes.push_back(std::move(stats));
  }
  return result;
}

}  // namespace semsplit

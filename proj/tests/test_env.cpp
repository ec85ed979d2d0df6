#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "semsplit/env.hpp"
#include "semsplit/units.hpp"

using namespace semsplit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

EnvConfig small_cfg() {
  EnvConfig cfg;
  cfg.n_users = 3;
  cfg.n_tx_antennas = 8;
  cfg.p_max_watts = dbm_to_watts(30.0);
  cfg.p_max_norm_ref_watts = dbm_to_watts(60.0);
  cfg.ses_thresholds = {1.0, 1.0, 1.0};
  cfg.steps_per_episode = 8;
  cfg.distances_m = {30.0, 100.0, 400.0};
  cfg.map.grid_h = 8;
  cfg.map.grid_w = 8;
  cfg.map.n_classes = 8;
  cfg.map.m_max = 16;
  cfg.text.prompts = {"rainy road with shops and cloudy sky near town",
                      "busy intersection with heavy traffic merging from left",
                      "wet street with sudden obstacle behind parked truck"};
  cfg.text.n_max = 8;
  return cfg;
}

ActionVector random_action(int len, PhiloxRng& rng) {
  ActionVector a(static_cast<std::size_t>(len));
  for (auto& v : a) v = rng.next_normal();
  return a;
}

}  // namespace

TEST_CASE("state and action lengths match the closed forms") {
  CHECK(state_length(3, 8) == 52);
  CHECK(action_length(3, 8) == 68);
  CHECK(state_length(1, 1) == 4);
  CHECK(action_length(1, 1) == 6);
  for (int k = 1; k <= 5; ++k)
    for (int nt = 1; nt <= 10; ++nt) {
      CHECK(state_length(k, nt) == 2 * nt * k + 1 + k);
      CHECK(action_length(k, nt) == 2 * nt + 2 * nt * k + 1 + k);
    }
}

TEST_CASE("encode_state layout, length, and round trip") {
  const EnvConfig cfg = small_cfg();
  const ChannelSet h = draw_channels(cfg.distances_m, cfg.n_tx_antennas, cfg.path_loss, 5);
  const StateVector s = encode_state(h, cfg);
  REQUIRE(static_cast<int>(s.size()) == 52);
  CHECK_THAT(s[48], WithinRel(cfg.p_max_watts / cfg.p_max_norm_ref_watts, 1e-14));
  CHECK(s[49] == 1.0);
  CHECK(s[51] == 1.0);

  const ChannelSet back = decode_state_channels(s, cfg);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 8; ++i) {
      CHECK_THAT(back.per_user[k][i].real(), WithinRel(h.per_user[k][i].real(), 1e-12));
      CHECK_THAT(back.per_user[k][i].imag(), WithinRel(h.per_user[k][i].imag(), 1e-12));
    }
}

TEST_CASE("encode_state rejects mismatched dimensions") {
  const EnvConfig cfg = small_cfg();
  const ChannelSet h = draw_channels({30.0, 100.0}, cfg.n_tx_antennas, cfg.path_loss, 5);
  CHECK_THROWS_AS(encode_state(h, cfg), std::invalid_argument);
}

TEST_CASE("budget quantizer endpoints and midpoint") {
  CHECK(quantize_budget(-1.0, 16) == 0);
  CHECK(quantize_budget(1.0, 16) == 16);
  CHECK(quantize_budget(0.0, 16) == 8);  // round(8.0)
  CHECK(quantize_budget(-1.0, 8) == 0);
  CHECK(quantize_budget(1.0, 8) == 8);
}

TEST_CASE("decode_action length check and budget clamping") {
  const EnvConfig cfg = small_cfg();
  CHECK_THROWS_AS(decode_action(ActionVector(67, 0.0), cfg), std::invalid_argument);

  ActionVector a(68, 0.0);
  a[64] = 50.0;   // n_c raw, clamped to 1 -> full budget
  a[65] = -50.0;  // user 0 private raw, clamped to -1 -> zero units
  const auto [beams, budget] = decode_action(a, cfg);
  CHECK(budget.n_c == 16);
  CHECK(budget.n_p[0] == 0);
  CHECK(budget.n_p[1] == 4);  // raw 0 -> half of n_max=8
  CHECK(budget.n_p[2] == 4);
}

TEST_CASE("decoded beamformers cannot exceed the power budget") {
  const EnvConfig cfg = small_cfg();
  PhiloxRng rng(7, RngStream::kPolicy);
  for (int trial = 0; trial < 50; ++trial) {
    const auto [beams, budget] = decode_action(random_action(68, rng), cfg);
    REQUIRE(total_power(beams) <= cfg.p_max_watts * (1.0 + 1e-12));
  }
  // Saturated raws hit the budget exactly.
  ActionVector a(68, 1e9);
  const auto [beams, budget] = decode_action(a, cfg);
  CHECK_THAT(total_power(beams), WithinRel(cfg.p_max_watts, 1e-12));
}

TEST_CASE("reward plug-ins: penalties vanish, power overshoot, SES shortfall") {
  EnvConfig cfg = small_cfg();
  cfg.alpha_penalty = 10.0;
  cfg.beta_penalty = 10.0;

  // Both constraints satisfied: reward is exactly the SES sum.
  const std::vector<double> ok{1.5, 1.4, 1.3};
  const RewardBreakdown clean = compute_reward(ok, cfg.p_max_watts * 0.5, cfg);
  CHECK_THAT(clean.reward, WithinRel(1.5 + 1.4 + 1.3, 1e-14));
  CHECK(clean.power_violation == 0.0);

  // Power exceeded by 0.25 W with SES constraints met.
  const RewardBreakdown hot = compute_reward(ok, cfg.p_max_watts + 0.25, cfg);
  CHECK_THAT(hot.reward, WithinRel(4.2 - 10.0 * 0.25, 1e-12));

  // One user 0.1 below its threshold.
  const std::vector<double> shortfall{1.5, 1.4, 0.9};
  const RewardBreakdown low = compute_reward(shortfall, cfg.p_max_watts * 0.5, cfg);
  CHECK_THAT(low.reward, WithinRel(3.8 - 10.0 * 0.1, 1e-12));
}

TEST_CASE("discounted return basics") {
  CHECK(discounted_return(std::vector<double>{1.0}, 0.9) == 1.0);
  CHECK_THAT(discounted_return(std::vector<double>{1.0, 1.0, 1.0}, 0.5),
             WithinRel(1.75, 1e-14));
  CHECK_THAT(discounted_return(std::vector<double>{2.0, 3.0, -1.0}, 1.0),
             WithinRel(4.0, 1e-14));
  CHECK_THROWS_AS(discounted_return(std::vector<double>{1.0}, 0.0), std::domain_error);
}

TEST_CASE("step outcome is internally consistent and penalties never help") {
  const EnvConfig cfg = small_cfg();
  Environment env(cfg, SchemeFlags{}, 33);
  PhiloxRng rng(34, RngStream::kPolicy);
  for (int t = 0; t < 40; ++t) {
    const StepOutcome out = env.step(random_action(68, rng));

    // Reward reproducible from its components (Eq. 13 audit).
    double ses_sum = 0.0;
    std::vector<double> totals;
    for (const auto& s : out.per_user_ses) {
      ses_sum += s.total;
      totals.push_back(s.total);
    }
    const RewardBreakdown rb = compute_reward(totals, out.power_used, cfg);
    REQUIRE_THAT(out.reward, WithinAbs(rb.reward, 1e-12));
    REQUIRE(out.reward <= ses_sum + 1e-12);

    // Slack fields match their definitions.
    REQUIRE_THAT(out.power_slack, WithinAbs(cfg.p_max_watts - out.power_used, 1e-12));
    for (int k = 0; k < 3; ++k)
      REQUIRE_THAT(out.ses_slacks[k],
                   WithinAbs(totals[k] - cfg.ses_thresholds[k], 1e-12));

    // SES equals the ses module evaluated on the same delivered fractions.
    for (int k = 0; k < 3; ++k) {
      const SesScore direct =
          surrogate_ses(out.rho_common[k], out.rho_private[k], cfg.surrogate);
      REQUIRE(direct.total == out.per_user_ses[k].total);  // tolerance 0
      REQUIRE(direct.clip_part == out.per_user_ses[k].clip_part);
    }
  }
}

TEST_CASE("fixed seed fixes the entire step outcome") {
  const EnvConfig cfg = small_cfg();
  Environment env_a(cfg, SchemeFlags{}, 77);
  Environment env_b(cfg, SchemeFlags{}, 77);
  PhiloxRng rng_a(5, RngStream::kPolicy);
  PhiloxRng rng_b(5, RngStream::kPolicy);
  for (int t = 0; t < 10; ++t) {
    const ActionVector a = random_action(68, rng_a);
    const ActionVector b = random_action(68, rng_b);
    REQUIRE(a == b);
    const StepOutcome oa = env_a.step(a);
    const StepOutcome ob = env_b.step(b);
    REQUIRE(oa.reward == ob.reward);
    REQUIRE(oa.next_state == ob.next_state);
    REQUIRE(oa.map_bits_flipped == ob.map_bits_flipped);
    REQUIRE(oa.text_bits_flipped == ob.text_bits_flipped);
  }
}

TEST_CASE("zero budgets transmit nothing and deliver nothing") {
  const EnvConfig cfg = small_cfg();
  Environment env(cfg, SchemeFlags{}, 3);
  ActionVector a(68, 0.0);
  for (std::size_t i = 64; i < 68; ++i) a[i] = -1.0;  // all budgets zero
  const StepOutcome out = env.step(a);
  CHECK(out.map_bits_sent == 0);
  CHECK(out.text_bits_sent == 0);
  for (int k = 0; k < 3; ++k) {
    CHECK(out.rho_common[k] == 0.0);
    CHECK(out.rho_private[k] == 0.0);
    CHECK_THAT(out.per_user_ses[k].total,
               WithinRel(surrogate_ses(0.0, 0.0, cfg.surrogate).total, 1e-14));
  }
}

TEST_CASE("map-only SDMA assembly sends no text and no common stream") {
  const EnvConfig cfg = small_cfg();
  Environment env(cfg, SchemeFlags{false, true, false, false}, 9);
  PhiloxRng rng(10, RngStream::kPolicy);
  const StepOutcome out = env.step(random_action(68, rng));
  CHECK(out.text_bits_sent == 0);
  CHECK(out.map_bits_sent > 0);
  for (int k = 0; k < 3; ++k) CHECK(out.rho_private[k] == 0.0);
}

TEST_CASE("text-only SDMA assembly sends no map bits") {
  const EnvConfig cfg = small_cfg();
  Environment env(cfg, SchemeFlags{false, false, true, false}, 9);
  PhiloxRng rng(10, RngStream::kPolicy);
  const StepOutcome out = env.step(random_action(68, rng));
  CHECK(out.map_bits_sent == 0);
  CHECK(out.text_bits_sent > 0);
  for (int k = 0; k < 3; ++k) CHECK(out.rho_common[k] == 0.0);
}

TEST_CASE("high power and full budgets deliver everything") {
  // Single user: a strong common beam plus a weak (but at 60 dBm still
  // high-SINR) private beam leaves both streams essentially error free.
  EnvConfig cfg = small_cfg();
  cfg.n_users = 1;
  cfg.distances_m = {30.0};
  cfg.ses_thresholds = {1.0};
  cfg.text.prompts = {cfg.text.prompts[0]};
  cfg.p_max_watts = dbm_to_watts(60.0);
  const int len = action_length(1, 8);
  Environment env(cfg, SchemeFlags{}, 21);
  ActionVector a(static_cast<std::size_t>(len), 0.0);
  for (int i = 0; i < 16; ++i) a[static_cast<std::size_t>(i)] = 3.0;    // common beam
  for (int i = 16; i < 32; ++i) a[static_cast<std::size_t>(i)] = 0.03;  // private beam
  a[32] = 1.0;  // full map budget
  a[33] = 1.0;  // full text budget
  const StepOutcome out = env.step(a);
  CHECK(out.ber_common[0] < 1e-6);
  CHECK(out.ber_private[0] < 1e-6);
  CHECK(out.rho_common[0] == 1.0);
  CHECK(out.rho_private[0] == 1.0);
}

TEST_CASE("environment config validation catches bad prompts and thresholds") {
  EnvConfig cfg = small_cfg();
  cfg.text.prompts[1] = "too short";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  EnvConfig cfg2 = small_cfg();
  cfg2.ses_thresholds = {1.0, 1.0, 2.5};
  CHECK_THROWS_AS(cfg2.validate(), std::invalid_argument);

  EnvConfig cfg3 = small_cfg();
  cfg3.map.grid_w = 7;  // 8*7 cells not divisible into 16 tiles
  CHECK_THROWS_AS(cfg3.validate(), std::invalid_argument);
}

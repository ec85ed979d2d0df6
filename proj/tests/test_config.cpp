#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "semsplit/config.hpp"

using namespace semsplit;
using nlohmann::json;

namespace {

json minimal_config() {
  return json::parse(R"({
    "schema_version": 1,
    "scheme": "SS-MGSC",
    "seeds": [1, 2],
    "env": {
      "n_t": 4,
      "ses_thresholds": [1.0, 1.0],
      "distances_m": [30.0, 100.0],
      "map": {"grid_h": 8, "grid_w": 8, "n_classes": 8, "m_max": 8},
      "text": {
        "prompts": [
          "rainy road with shops and cloudy sky near town",
          "wet street with sudden obstacle behind parked truck"
        ],
        "n_max": 6
      }
    },
    "ppo": {"max_episodes": 4, "buffer_capacity": 32, "minibatch_size": 16}
  })");
}

}  // namespace

TEST_CASE("minimal config parses with defaults filled in") {
  const ExperimentConfig cfg = parse_config(minimal_config(), ".");
  CHECK(cfg.scheme == Scheme::kSsMgsc);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(cfg.env.n_users == 2);
  CHECK(cfg.env.n_tx_antennas == 4);
  CHECK(cfg.ppo.gamma == 0.99);
  CHECK(cfg.ppo.clip_eps == 0.2);
  CHECK(cfg.ppo.minibatch_size == 16);
  CHECK(cfg.env.surrogate.w_img == 0.6);
  // p_max defaults to 30 dBm = 1 W.
  CHECK(std::abs(cfg.env.p_max_watts - 1.0) < 1e-12);
}

TEST_CASE("unknown keys are rejected everywhere") {
  json bad = minimal_config();
  bad["powr_grid_dbm"] = {10.0};  // typo at root
  CHECK_THROWS_AS(parse_config(bad, "."), ConfigError);

  json bad_env = minimal_config();
  bad_env["env"]["p_mx_dbm"] = 20.0;
  CHECK_THROWS_AS(parse_config(bad_env, "."), ConfigError);

  json bad_map = minimal_config();
  bad_map["env"]["map"]["classes"] = 4;
  CHECK_THROWS_AS(parse_config(bad_map, "."), ConfigError);

  json bad_ppo = minimal_config();
  bad_ppo["ppo"]["learningrate"] = 0.1;
  CHECK_THROWS_AS(parse_config(bad_ppo, "."), ConfigError);
}

TEST_CASE("invalid values are config errors") {
  json no_seeds = minimal_config();
  no_seeds["seeds"] = json::array();
  CHECK_THROWS_AS(parse_config(no_seeds, "."), ConfigError);

  json bad_scheme = minimal_config();
  bad_scheme["scheme"] = "X-MGSC";
  CHECK_THROWS_AS(parse_config(bad_scheme, "."), ConfigError);

  json bad_version = minimal_config();
  bad_version["schema_version"] = 2;
  CHECK_THROWS_AS(parse_config(bad_version, "."), ConfigError);

  json bad_rng = minimal_config();
  bad_rng["rng"] = {{"algorithm", "mt19937"}};
  CHECK_THROWS_AS(parse_config(bad_rng, "."), ConfigError);

  json bad_threshold = minimal_config();
  bad_threshold["env"]["ses_thresholds"] = {1.0, 3.0};
  CHECK_THROWS_AS(parse_config(bad_threshold, "."), ConfigError);

  json bad_type = minimal_config();
  bad_type["env"]["n_t"] = "eight";
  CHECK_THROWS_AS(parse_config(bad_type, "."), ConfigError);
}

TEST_CASE("missing required sections are config errors") {
  json no_env = minimal_config();
  no_env.erase("env");
  CHECK_THROWS_AS(parse_config(no_env, "."), ConfigError);

  json no_text = minimal_config();
  no_text["env"].erase("text");
  CHECK_THROWS_AS(parse_config(no_text, "."), ConfigError);

  json no_version = minimal_config();
  no_version.erase("schema_version");
  CHECK_THROWS_AS(parse_config(no_version, "."), ConfigError);
}

TEST_CASE("power grid maximum becomes the state normalization reference") {
  json j = minimal_config();
  j["power_grid_dbm"] = {10.0, 40.0, 20.0};
  const ExperimentConfig cfg = parse_config(j, ".");
  CHECK(std::abs(cfg.env.p_max_norm_ref_watts - dbm_to_watts(40.0)) < 1e-12);

  j["env"]["p_max_norm_ref_dbm"] = 60.0;
  const ExperimentConfig cfg2 = parse_config(j, ".");
  CHECK(std::abs(cfg2.env.p_max_norm_ref_watts - dbm_to_watts(60.0)) < 1e-9);
}

TEST_CASE("scheme names round-trip") {
  for (Scheme s : {Scheme::kSsMgsc, Scheme::kSegsMgsc, Scheme::kOMgsc, Scheme::kTMgsc})
    CHECK(parse_scheme(scheme_name(s)) == s);
}

TEST_CASE("repository default config loads and validates") {
  const std::filesystem::path here = std::filesystem::path(__FILE__).parent_path();
  const auto cfg_path = here / ".." / "configs" / "default.json";
  const ExperimentConfig cfg = load_config(cfg_path.string());
  CHECK(cfg.env.n_users == 3);
  CHECK(cfg.env.n_tx_antennas == 8);
  CHECK(cfg.env.distances_m == std::vector<double>{30.0, 100.0, 400.0});
  CHECK(cfg.ppo.lr_actor == 1e-3);
  CHECK(cfg.ppo.lr_critic == 3e-4);
  CHECK(cfg.ppo.minibatch_size == 128);
  CHECK(cfg.ppo.clip_eps == 0.2);
  CHECK(cfg.ppo.gamma == 0.99);
  CHECK(cfg.power_grid_dbm.size() == 6);
  CHECK_FALSE(cfg.env.text.dictionary.empty());
}

TEST_CASE("dictionary files reject duplicates") {
  const auto tmp = std::filesystem::temp_directory_path() / "semsplit_dup_dict.txt";
  {
    std::ofstream out(tmp);
    out << "alpha\nbeta\nalpha\n";
  }
  CHECK_THROWS_AS(load_dictionary(tmp.string()), std::runtime_error);
  std::filesystem::remove(tmp);
}

TEST_CASE("config file loading reports open failures as config errors") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

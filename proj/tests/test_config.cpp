#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cbfrl/config.hpp"

using namespace cbfrl;
using nlohmann::json;

namespace {

RunConfig merged(const char* text) {
    RunConfig cfg;
    merge_json(cfg, json::parse(text));
    cfg.validate();
    return cfg;
}

}  // namespace

TEST_CASE("defaults carry the environment table") {
    RunConfig cfg;
    cfg.validate();
    CHECK(cfg.world.arena_half_extent == 0.75);
    CHECK(cfg.world.obstacle_radius == 0.2);
    CHECK(cfg.world.goal_radius == 0.05);
    CHECK(cfg.world.agent_radius == 0.2);
    CHECK(cfg.world.v_des == 0.2);
    CHECK(cfg.world.dt == 0.1);
    CHECK(cfg.world.max_steps == 1000);
    CHECK(cfg.cbf.delta == 0.45);
    CHECK(cfg.cbf.kappa == 500.0);
    CHECK(cfg.cbf.omega_bounds.hi == 0.7);
    CHECK(cfg.sac.omega_max == 0.7);
    CHECK(cfg.heatmap_bins == 15);
    CHECK(cfg.bridge.watchdog_ms == 500);
}

TEST_CASE("resolved config round-trips") {
    RunConfig cfg = merged(R"({"train": {"mode": "decay", "seed": 7, "steps": 1234},
                               "sac": {"hidden": [32, 16], "store_action": "proposed"},
                               "cbf": {"kappa": 250}})");
    CHECK(cfg.train.mode == Mode::decay);
    CHECK(cfg.sac.hidden == std::vector<int>{32, 16});
    CHECK(cfg.sac.store_action == StoreAction::proposed);
    CHECK(cfg.cbf.kappa == 250.0);
    const auto first = to_json(cfg);
    RunConfig again;
    merge_json(again, json::parse(first.dump()));
    again.validate();
    CHECK(to_json(again) == first);
}

TEST_CASE("partial documents keep unspecified defaults") {
    const RunConfig cfg = merged(R"({"world": {"min_separation": {"agent_goal": 0.4}}})");
    CHECK(cfg.world.min_separation.agent_goal == 0.4);
    CHECK(cfg.world.min_separation.agent_obstacle == 0.55);
    CHECK(cfg.world.dt == 0.1);
}

TEST_CASE("unknown keys and bad types are rejected with their path") {
    RunConfig cfg;
    CHECK_THROWS_WITH_AS(merge_json(cfg, json::parse(R"({"wrld": {}})")), "wrld: unknown key", ConfigError);
    CHECK_THROWS_WITH_AS(merge_json(cfg, json::parse(R"({"cbf": {"kapa": 1}})")), "cbf.kapa: unknown key",
                         ConfigError);
    CHECK_THROWS_AS(merge_json(cfg, json::parse(R"({"world": {"max_steps": 10.5}})")), ConfigError);
    CHECK_THROWS_AS(merge_json(cfg, json::parse(R"({"train": {"mode": "shield"}})")), ConfigError);
    CHECK_THROWS_AS(merge_json(cfg, json::parse(R"({"train": {"seed": -1}})")), ConfigError);
    CHECK_THROWS_AS(merge_json(cfg, json::parse(R"({"cbf": {"v_bounds": [0]}})")), ConfigError);
    CHECK_THROWS_AS(merge_json(cfg, json::parse(R"({"bridge": {"cbf_on": "yes"}})")), ConfigError);
    CHECK_THROWS_AS(merge_json(cfg, json::parse(R"([1, 2])")), ConfigError);
}

TEST_CASE("validation catches inconsistent values") {
    CHECK_THROWS_AS(merged(R"({"cbf": {"omega_bounds": [-0.5, 0.7]}})"), ConfigError);
    CHECK_THROWS_AS(merged(R"({"cbf": {"delta": 0}})"), ConfigError);
    CHECK_THROWS_AS(merged(R"({"world": {"v_des": 0.3}})"), ConfigError);
    CHECK_THROWS_AS(merged(R"({"train": {"steps": 0}})"), ConfigError);
    CHECK_THROWS_AS(merged(R"({"sac": {"gamma": 1.0}})"), ConfigError);
    CHECK_THROWS_AS(merged(R"({"heatmap": {"goal": [2, 0]}})"), ConfigError);
    CHECK_THROWS_AS(merged(R"({"bridge": {"port": 70000}})"), ConfigError);
}

TEST_CASE("shared fields follow their source") {
    const RunConfig cfg = merged(R"({"world": {"v_des": 0.15}, "cbf": {"v_bounds": [0, 0.15], "omega_bounds": [-1, 1]}})");
    CHECK(cfg.cbf.v_des == 0.15);
    CHECK(cfg.sac.omega_max == 1.0);
}

TEST_CASE("config files load and report their errors") {
    const auto dir = std::filesystem::temp_directory_path() / "cbfrl_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "ok.json") << R"({"train": {"mode": "filter"}})";
        std::ofstream(dir / "broken.json") << R"({"train": )";
    }
    CHECK(load_config(dir / "ok.json").train.mode == Mode::filter);
    CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);

    RunConfig cfg = load_config(dir / "ok.json");
    write_resolved(cfg, dir / "config.resolved");
    CHECK(to_json(load_config(dir / "config.resolved")) == to_json(cfg));
    std::filesystem::remove_all(dir);
}

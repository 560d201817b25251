#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "cbfrl/cbf.hpp"
#include "cbfrl/environment.hpp"
#include "cbfrl/evaluation.hpp"
#include "cbfrl/integration.hpp"
#include "cbfrl/sac.hpp"

namespace cbfrl {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    Mode mode = Mode::sac;
    std::int64_t steps = 300000;
    std::uint64_t seed = 0;
    std::int64_t eval_interval = 10000;
    int eval_episodes = 15;
    double reward_penalty_scale = 1.0;
};

struct BridgeConfig {
    std::string host = "127.0.0.1";
    int port = 7878;
    int watchdog_ms = 500;
    bool cbf_on = true;
};

// Everything a run depends on. Sections mirror the JSON layout:
// world, cbf, sac, train, heatmap, bridge.
struct RunConfig {
    WorldConfig world;
    CbfParams cbf;  // obstacle_center is set per episode; v_des comes from world
    SacConfig sac;  // omega_max follows cbf.omega_bounds
    TrainConfig train;
    HeatmapLayout heatmap_layout;
    int heatmap_bins = 15;
    BridgeConfig bridge;

    // Re-derives the shared fields and checks every invariant. Throws ConfigError.
    void validate();

    ModeConfig mode_config() const { return {train.mode, train.steps, train.reward_penalty_scale}; }
};

nlohmann::ordered_json to_json(const RunConfig& cfg);

// Fills `cfg` from a possibly partial document; keys absent from the document keep
// their current values. Unknown keys and wrongly typed values throw ConfigError.
void merge_json(RunConfig& cfg, const nlohmann::json& doc);

RunConfig load_config(const std::filesystem::path& path);

// Writes to_json(cfg) to `path`, pretty-printed.
void write_resolved(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace cbfrl

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cbfrl/config.hpp"

namespace cbfrl {

// One row of log.csv.
struct LogRow {
    std::int64_t step = 0;
    std::uint64_t seed = 0;
    Mode mode = Mode::sac;
    double avg_reward_with_cbf = 0.0;
    double avg_reward_without_cbf = 0.0;
    double activation_pct = 0.0;       // from the with-CBF evaluation
    double episode_length_mean = 0.0;  // from the with-CBF evaluation
};

inline constexpr const char* kLogHeader =
    "step,seed,mode,avg_reward_with_cbf,avg_reward_without_cbf,activation_pct,episode_length_mean";

std::string format_log_row(const LogRow& row);
// Parses a log.csv produced by train. Throws std::runtime_error on malformed input.
std::vector<LogRow> read_log(const std::filesystem::path& path);

// Independent generator streams derived from the run seed.
enum class Stream : std::uint32_t { init = 1, env = 2, action = 3, update = 4, eval = 5 };
Rng stream_rng(std::uint64_t seed, Stream stream);
// Seed of the evaluation layouts; shared by every evaluation point of a run.
std::uint64_t eval_seed(std::uint64_t seed);

// Runs the evaluation pair used for one log row.
LogRow evaluate_row(const SacAgent& agent, const RunConfig& cfg, std::int64_t step);

using ProgressFn = std::function<void(const LogRow&)>;

// Trains cfg.train.steps environment steps and writes, under out_dir:
//   config.resolved, log.csv (one row per evaluation point) and
//   checkpoints/step_<N>.json plus checkpoints/final.json.
// cfg must be validated. Throws NonFiniteError if learning diverges.
std::vector<LogRow> train(const RunConfig& cfg, const std::filesystem::path& out_dir,
                          const ProgressFn& progress = {});

}  // namespace cbfrl

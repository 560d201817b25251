#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>

#include "cbfrl/config.hpp"
#include "cbfrl/sac.hpp"

namespace cbfrl {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

// Self-describing JSON: format tag, version, training step, the resolved run
// configuration, log_alpha and every network as layer sizes plus flat parameters.
// Doubles are written in shortest round-trip form, so reloading is bit-exact.
void save_checkpoint(const std::filesystem::path& path, const SacAgent& agent, const RunConfig& cfg,
                     std::int64_t step);

struct LoadedCheckpoint {
    RunConfig config;
    std::int64_t step = 0;
    std::unique_ptr<SacAgent> agent;
};

// Throws CheckpointError on a missing file, wrong format or version, or shape mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cbfrl

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "cbfrl/environment.hpp"
#include "cbfrl/integration.hpp"
#include "cbfrl/sac.hpp"

namespace cbfrl {

// Deterministic map from observation to angular velocity.
using Policy = std::function<double(const Observation&)>;

Policy mean_policy(const SacAgent& agent);

struct EpisodeStep {
    int t = 0;
    UnicycleState state;  // pre-step pose
    Observation observation;
    double omega_proposed = 0.0;
    Control executed;
    double reward = 0.0;
    double h = 0.0;
    bool cbf_active = false;
};

enum class Outcome { goal, timeout };

struct EpisodeLog {
    std::vector<EpisodeStep> steps;
    Outcome outcome = Outcome::timeout;
    int collision_steps = 0;

    double total_reward() const;
};

// 100 * (steps with h <= 0) / steps. Throws std::invalid_argument on an empty log.
double activation_percentage(const EpisodeLog& log);

// Rolls one episode from `world` to termination or truncation. With cbf_on the
// filter rule is applied regardless of how the policy was trained.
EpisodeLog run_episode(World world, const Policy& policy, const WorldConfig& world_cfg, const CbfParams& cbf,
                       bool cbf_on);

struct EvalSummary {
    int episodes = 0;
    double mean_reward = 0.0;
    double mean_length = 0.0;
    double activation_pct = 0.0;  // mean of per-episode percentages
    int collision_steps = 0;
    int goals = 0;
};

// Evaluates on `episodes` layouts drawn from `seed`; the same seed gives the same layouts.
EvalSummary evaluate_policy(const Policy& policy, const WorldConfig& world_cfg, const CbfParams& cbf, int episodes,
                            bool cbf_on, std::uint64_t seed);

struct HeatmapLayout {
    Eigen::Vector2d goal{0.45, 0.45};
    Eigen::Vector2d obstacle{0.0, 0.0};
};

struct HeatmapGrid {
    std::vector<double> edges;  // bins + 1 edges, shared by x and y
    Eigen::MatrixXd values;     // row i spans y in [edges[i], edges[i+1]], column j spans x likewise
};

// Pose at p heading towards the obstacle; heading 0 when p is the obstacle center.
UnicycleState facing_obstacle(const Eigen::Vector2d& p, const Eigen::Vector2d& obstacle);

// Mean over agents of the state value at every bin centroid, heading towards the
// obstacle (heading 0 when the centroid sits on the obstacle center).
HeatmapGrid value_heatmap(const std::vector<const SacAgent*>& agents, const HeatmapLayout& layout, int bins,
                          double half_extent);

void write_heatmap_csv(std::ostream& out, const HeatmapGrid& grid);

// One JSON object per step with fields episode, t, x, y, theta, v, omega, h, cbf_active, reward.
void record_trajectories(std::ostream& out, const Policy& policy, const HeatmapLayout& layout,
                         const std::vector<UnicycleState>& starts, const WorldConfig& world_cfg,
                         const CbfParams& cbf, bool cbf_on);

}  // namespace cbfrl

#include "cbfrl/evaluation.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cbfrl {

Policy mean_policy(const SacAgent& agent) {
    return [&agent](const Observation& obs) { return agent.mean_action(obs); };
}

double EpisodeLog::total_reward() const {
    double sum = 0.0;
    for (const auto& s : steps) sum += s.reward;
    return sum;
}

double activation_percentage(const EpisodeLog& log) {
    if (log.steps.empty()) throw std::invalid_argument("activation_percentage: empty episode log");
    std::size_t active = 0;
    for (const auto& s : log.steps) active += s.cbf_active ? 1 : 0;
    return 100.0 * static_cast<double>(active) / static_cast<double>(log.steps.size());
}

EpisodeLog run_episode(World world, const Policy& policy, const WorldConfig& world_cfg, const CbfParams& cbf,
                       bool cbf_on) {
    const ModeConfig mode{cbf_on ? Mode::filter : Mode::sac, 1, 0.0};
    const CbfParams barrier = barrier_for(world, cbf);
    EpisodeLog log;
    for (;;) {
        EpisodeStep rec;
        rec.t = world.step_count;
        rec.state = world.agent;
        rec.observation = observe(world);
        rec.omega_proposed = cbf.omega_bounds.clamp(policy(rec.observation));
        const ActionResolution res = resolve_action(mode, world.agent, rec.omega_proposed, barrier, rec.t);
        const StepResult out = env_step(world, res.executed, world_cfg);
        rec.executed = res.executed;
        rec.reward = out.reward;
        rec.h = res.h;
        rec.cbf_active = res.cbf_active;
        log.steps.push_back(rec);
        if (out.info.collision) ++log.collision_steps;
        if (out.terminated) {
            log.outcome = Outcome::goal;
            break;
        }
        if (out.truncated) break;
    }
    return log;
}

EvalSummary evaluate_policy(const Policy& policy, const WorldConfig& world_cfg, const CbfParams& cbf, int episodes,
                            bool cbf_on, std::uint64_t seed) {
    if (episodes < 1) throw std::invalid_argument("evaluate_policy: episodes must be >= 1");
    Rng rng(seed);
    EvalSummary sum;
    sum.episodes = episodes;
    for (int e = 0; e < episodes; ++e) {
        const World world = reset(world_cfg, cbf, rng);
        const EpisodeLog log = run_episode(world, policy, world_cfg, cbf, cbf_on);
        sum.mean_reward += log.total_reward();
        sum.mean_length += static_cast<double>(log.steps.size());
        sum.activation_pct += activation_percentage(log);
        sum.collision_steps += log.collision_steps;
        sum.goals += log.outcome == Outcome::goal ? 1 : 0;
    }
    sum.mean_reward /= episodes;
    sum.mean_length /= episodes;
    sum.activation_pct /= episodes;
    return sum;
}

UnicycleState facing_obstacle(const Eigen::Vector2d& p, const Eigen::Vector2d& obstacle) {
    const Eigen::Vector2d d = obstacle - p;
    const double theta = (d.x() == 0.0 && d.y() == 0.0) ? 0.0 : wrap_angle(std::atan2(d.y(), d.x()));
    return {p.x(), p.y(), theta};
}

HeatmapGrid value_heatmap(const std::vector<const SacAgent*>& agents, const HeatmapLayout& layout, int bins,
                          double half_extent) {
    if (bins < 1) throw std::invalid_argument("value_heatmap: bins must be >= 1");
    if (agents.empty()) throw std::invalid_argument("value_heatmap: at least one agent is required");
    HeatmapGrid grid;
    const double width = 2.0 * half_extent / bins;
    for (int i = 0; i <= bins; ++i) grid.edges.push_back(-half_extent + width * i);
    grid.values = Eigen::MatrixXd::Zero(bins, bins);
    World world;
    world.goal = layout.goal;
    world.obstacle = layout.obstacle;
    for (int i = 0; i < bins; ++i) {
        for (int j = 0; j < bins; ++j) {
            // Written so that the middle bin of an odd grid lands exactly on 0.
            const Eigen::Vector2d c{half_extent * ((2.0 * j + 1.0) / bins - 1.0),
                                    half_extent * ((2.0 * i + 1.0) / bins - 1.0)};
            world.agent = facing_obstacle(c, layout.obstacle);
            const Observation obs = observe(world);
            double total = 0.0;
            for (const SacAgent* a : agents) total += a->estimate_state_value(obs);
            grid.values(i, j) = total / static_cast<double>(agents.size());
        }
    }
    return grid;
}

void write_heatmap_csv(std::ostream& out, const HeatmapGrid& grid) {
    const auto precise = out.precision(17);
    for (std::size_t k = 0; k < grid.edges.size(); ++k) out << (k ? "," : "") << grid.edges[k];
    out << '\n';
    for (Eigen::Index i = 0; i < grid.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < grid.values.cols(); ++j) out << (j ? "," : "") << grid.values(i, j);
        out << '\n';
    }
    out.precision(precise);
}

void record_trajectories(std::ostream& out, const Policy& policy, const HeatmapLayout& layout,
                         const std::vector<UnicycleState>& starts, const WorldConfig& world_cfg,
                         const CbfParams& cbf, bool cbf_on) {
    for (std::size_t e = 0; e < starts.size(); ++e) {
        World world;
        world.agent = {starts[e].x, starts[e].y, wrap_angle(starts[e].theta)};
        world.goal = layout.goal;
        world.obstacle = layout.obstacle;
        const EpisodeLog log = run_episode(world, policy, world_cfg, cbf, cbf_on);
        for (const auto& s : log.steps) {
            const nlohmann::ordered_json rec{{"episode", e},
                                             {"t", s.t},
                                             {"x", s.state.x},
                                             {"y", s.state.y},
                                             {"theta", s.state.theta},
                                             {"v", s.executed.v},
                                             {"omega", s.executed.omega},
                                             {"h", s.h},
                                             {"cbf_active", s.cbf_active},
                                             {"reward", s.reward}};
            out << rec.dump() << '\n';
        }
    }
}

}  // namespace cbfrl

#include "cbfrl/environment.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cbfrl {

namespace {

constexpr int kMaxRejections = 10000;

void require(bool condition, const char* what) {
    if (!condition) throw std::invalid_argument(std::string("invalid WorldConfig: ") + what);
}

}  // namespace

void WorldConfig::validate() const {
    require(arena_half_extent > 0.0, "arena_half_extent must be > 0");
    require(obstacle_radius > 0.0 && goal_radius > 0.0 && agent_radius > 0.0, "radii must be > 0");
    require(v_des >= 0.0, "v_des must be >= 0");
    require(dt > 0.0, "dt must be > 0");
    require(max_steps > 0, "max_steps must be > 0");
    require(collision_reward < 0.0 && goal_reward > 0.0, "need collision_reward < 0 < goal_reward");
    require(min_separation.agent_obstacle >= 0.0 && min_separation.goal_obstacle >= 0.0 &&
                min_separation.agent_goal >= 0.0,
            "separations must be >= 0");
}

CbfParams barrier_for(const World& world, CbfParams base) {
    base.obstacle_center = world.obstacle;
    return base;
}

Observation observe(const World& world) {
    return {to_agent_frame(world.agent, world.goal), to_agent_frame(world.agent, world.obstacle)};
}

World reset(const WorldConfig& cfg, const CbfParams& barrier, Rng& rng) {
    std::uniform_real_distribution<double> coord(-cfg.arena_half_extent, cfg.arena_half_extent);
    std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
    const auto& sep = cfg.min_separation;
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
        World w;
        w.agent.x = coord(rng);
        w.agent.y = coord(rng);
        w.agent.theta = wrap_angle(heading(rng));
        w.goal = {coord(rng), coord(rng)};
        w.obstacle = {coord(rng), coord(rng)};
        const Eigen::Vector2d pos = w.agent.position();
        if ((pos - w.obstacle).norm() < sep.agent_obstacle) continue;
        if ((w.goal - w.obstacle).norm() < sep.goal_obstacle) continue;
        if ((pos - w.goal).norm() < sep.agent_goal) continue;
        if (barrier_value(w.agent, barrier_for(w, barrier)) <= 0.0) continue;
        return w;
    }
    throw SamplingExhausted("reset: no admissible layout after 10000 rejections");
}

StepResult env_step(World& world, const Control& executed, const WorldConfig& cfg) {
    world.agent = step(world.agent, executed, cfg.dt);
    ++world.step_count;

    StepResult r;
    r.observation = observe(world);
    r.info.executed = executed;
    r.info.goal_distance = (world.agent.position() - world.goal).norm();
    r.info.obstacle_distance = (world.agent.position() - world.obstacle).norm();
    r.info.collision = r.info.obstacle_distance < cfg.collision_threshold();

    if (r.info.goal_distance <= cfg.goal_threshold()) {
        r.reward = cfg.goal_reward;
        r.terminated = true;
    } else if (r.info.collision) {
        r.reward = cfg.collision_reward;
    }
    r.truncated = !r.terminated && world.step_count >= cfg.max_steps;
    return r;
}

}  // namespace cbfrl

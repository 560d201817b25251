#pragma once

#include <random>
#include <stdexcept>

#include <Eigen/Core>

#include "cbfrl/cbf.hpp"
#include "cbfrl/kinematics.hpp"

namespace cbfrl {

using Rng = std::mt19937_64;

// Center-to-center separations enforced when an episode is sampled.
struct SeparationRules {
    double agent_obstacle = 0.55;
    double goal_obstacle = 0.5;
    double agent_goal = 0.3;
};

struct WorldConfig {
    double arena_half_extent = 0.75;
    double obstacle_radius = 0.2;
    double goal_radius = 0.05;
    double agent_radius = 0.2;
    double v_des = 0.2;
    double dt = 0.1;
    int max_steps = 1000;
    double goal_reward = 10.0;
    double collision_reward = -10.0;
    SeparationRules min_separation;

    void validate() const;

    // Disc-contact thresholds on center distance.
    double goal_threshold() const { return goal_radius + agent_radius; }
    double collision_threshold() const { return obstacle_radius + agent_radius; }
    bool in_arena(const Eigen::Vector2d& p) const {
        return std::abs(p.x()) <= arena_half_extent && std::abs(p.y()) <= arena_half_extent;
    }
};

// Goal and obstacle positions expressed in the agent frame.
struct Observation {
    Eigen::Vector2d goal_rel = Eigen::Vector2d::Zero();
    Eigen::Vector2d obstacle_rel = Eigen::Vector2d::Zero();

    Eigen::Vector4d as_vector() const { return {goal_rel.x(), goal_rel.y(), obstacle_rel.x(), obstacle_rel.y()}; }
};

struct World {
    UnicycleState agent;
    Eigen::Vector2d goal = Eigen::Vector2d::Zero();
    Eigen::Vector2d obstacle = Eigen::Vector2d::Zero();
    int step_count = 0;
};

struct StepInfo {
    double h = 0.0;            // barrier value on the pre-step state, filled by the caller that owns the guardrail
    bool cbf_active = false;   // filled by the caller that owns the guardrail
    bool collision = false;
    Control executed;
    double goal_distance = 0.0;
    double obstacle_distance = 0.0;
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
    StepInfo info;
};

class SamplingExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Barrier parameters re-centred on the world's obstacle.
CbfParams barrier_for(const World& world, CbfParams base);

Observation observe(const World& world);

// Rejection-samples agent pose, goal and obstacle uniformly in the arena until
// the separation rules hold and the barrier is positive at the start pose.
// Throws SamplingExhausted after 10,000 rejections.
World reset(const WorldConfig& cfg, const CbfParams& barrier, Rng& rng);

// Advances the agent and scores the step. Reaching the goal terminates with the
// goal reward; every step that ends inside the collision disc is charged the
// collision reward without ending the episode; leaving the arena changes nothing.
StepResult env_step(World& world, const Control& executed, const WorldConfig& cfg);

}  // namespace cbfrl

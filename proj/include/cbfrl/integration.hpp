#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "cbfrl/cbf.hpp"
#include "cbfrl/kinematics.hpp"

namespace cbfrl {

enum class Mode { sac, filter, reward, decay };

std::string to_string(Mode mode);
// Throws std::invalid_argument for anything other than sac, filter, reward, decay.
Mode parse_mode(std::string_view name);

struct ModeConfig {
    Mode mode = Mode::sac;
    std::int64_t total_steps = 300000;
    double reward_penalty_scale = 1.0;
};

struct ActionResolution {
    Control proposed;            // (v_des, omega_pi)
    std::optional<Control> cbf;  // safety-QP output, present whenever the guardrail is engaged outside sac mode
    Control executed;
    bool cbf_active = false;     // h <= 0 on the pre-step state
    double h = 0.0;
    double beta = 0.0;
    double slack = 0.0;
};

// Linear schedule 1 - t / T clamped to [0, 1].
double decay_beta(std::int64_t t, std::int64_t total);

// Routes the policy's angular velocity through the mode's guardrail rule.
//   sac:    executed = proposed.
//   filter: executed = cbf while active.
//   reward: executed = proposed; the cbf control only feeds shaped_reward.
//   decay:  executed = beta cbf + (1 - beta) proposed while active, both components.
// omega_pi must already lie in params.omega_bounds.
ActionResolution resolve_action(const ModeConfig& mode, const UnicycleState& s, double omega_pi,
                                const CbfParams& params, std::int64_t t);

// In reward mode with the guardrail engaged, subtracts scale (|v_cbf - v_des| + |omega_cbf - omega_pi|).
double shaped_reward(const ModeConfig& mode, double env_reward, const ActionResolution& res, double v_des);

}  // namespace cbfrl

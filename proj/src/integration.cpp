#include "cbfrl/integration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cbfrl {

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::sac: return "sac";
        case Mode::filter: return "filter";
        case Mode::reward: return "reward";
        case Mode::decay: return "decay";
    }
    return "unknown";
}

Mode parse_mode(std::string_view name) {
    if (name == "sac") return Mode::sac;
    if (name == "filter") return Mode::filter;
    if (name == "reward") return Mode::reward;
    if (name == "decay") return Mode::decay;
    throw std::invalid_argument("unknown mode '" + std::string(name) + "' (expected sac, filter, reward or decay)");
}

double decay_beta(std::int64_t t, std::int64_t total) {
    if (total <= 0) throw std::invalid_argument("decay_beta: total must be > 0");
    const double beta = 1.0 - static_cast<double>(t) / static_cast<double>(total);
    return std::clamp(beta, 0.0, 1.0);
}

ActionResolution resolve_action(const ModeConfig& mode, const UnicycleState& s, double omega_pi,
                                const CbfParams& params, std::int64_t t) {
    ActionResolution res;
    res.proposed = {params.v_des, omega_pi};
    res.executed = res.proposed;
    res.h = barrier_value(s, params);
    res.cbf_active = res.h <= 0.0;
    res.beta = mode.mode == Mode::decay ? decay_beta(t, mode.total_steps) : 0.0;
    if (!res.cbf_active || mode.mode == Mode::sac) return res;

    const SafeControl safe = solve_safe_control(s, res.proposed, params);
    res.cbf = safe.control;
    res.slack = safe.slack;
    switch (mode.mode) {
        case Mode::filter:
            res.executed = safe.control;
            break;
        case Mode::decay:
            res.executed.v = res.beta * safe.control.v + (1.0 - res.beta) * res.proposed.v;
            res.executed.omega = res.beta * safe.control.omega + (1.0 - res.beta) * res.proposed.omega;
            break;
        case Mode::reward:
        case Mode::sac:
            break;
    }
    return res;
}

double shaped_reward(const ModeConfig& mode, double env_reward, const ActionResolution& res, double v_des) {
    if (mode.mode != Mode::reward || !res.cbf_active || !res.cbf) return env_reward;
    const double deviation = std::abs(res.cbf->v - v_des) + std::abs(res.cbf->omega - res.proposed.omega);
    return env_reward - mode.reward_penalty_scale * deviation;
}

}  // namespace cbfrl

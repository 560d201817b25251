#include "cbfrl/cbf.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cbfrl {

namespace {

constexpr double kNegligible = 1e-13;

void require(bool condition, const char* what) {
    if (!condition) throw std::invalid_argument(std::string("invalid CbfParams: ") + what);
}

// Maximizer of a.u over the box. Coordinates with a zero coefficient take the
// value closest to the target instead.
Control box_maximizer(const ConstraintRow& row, const Control& target, const CbfParams& p) {
    Control u;
    if (row.a_v > 0.0) u.v = p.v_bounds.hi;
    else if (row.a_v < 0.0) u.v = p.v_bounds.lo;
    else u.v = p.v_bounds.clamp(target.v);
    if (row.a_omega > 0.0) u.omega = p.omega_bounds.hi;
    else if (row.a_omega < 0.0) u.omega = p.omega_bounds.lo;
    else u.omega = p.omega_bounds.clamp(target.omega);
    return u;
}

}  // namespace

void CbfParams::validate() const {
    require(std::isfinite(obstacle_center.x()) && std::isfinite(obstacle_center.y()), "obstacle_center not finite");
    require(delta > 0.0, "delta must be > 0");
    require(epsilon > 0.0, "epsilon must be > 0");
    require(alpha_gain > 0.0, "alpha_gain must be > 0");
    require(kappa > 0.0, "kappa must be > 0");
    require(slack_weight > 0.0, "slack_weight must be > 0");
    require(v_bounds.lo <= v_bounds.hi, "v_bounds empty");
    require(omega_bounds.lo <= omega_bounds.hi, "omega_bounds empty");
    require(v_bounds.contains(v_des), "v_des outside v_bounds");
}

double barrier_value(const UnicycleState& s, const CbfParams& params) {
    const Eigen::Vector2d d = shifted_point(s, params.epsilon) - params.obstacle_center;
    const double r = params.delta + params.epsilon;
    return d.squaredNorm() - r * r;
}

ConstraintRow constraint_coefficients(const UnicycleState& s, const CbfParams& params) {
    const Eigen::Vector2d d = shifted_point(s, params.epsilon) - params.obstacle_center;
    const Eigen::RowVector2d g = 2.0 * d.transpose() * rotation_matrix(s.theta);
    return {g(0), g(1) * params.epsilon};
}

double implied_slack(const ConstraintRow& row, double h, const Control& u, const CbfParams& params) {
    return std::max(0.0, -params.class_k(h) - row.dot(u));
}

double penalized_objective(const Control& u, double slack, double omega_pi, const CbfParams& params) {
    const double dv = u.v - params.v_des;
    const double dw = u.omega - omega_pi;
    return params.kappa * dv * dv + dw * dw + params.slack_weight * slack * slack;
}

SafeControl solve_safe_control(const UnicycleState& s, const Control& proposal, const CbfParams& params) {
    SafeControl out;
    out.h = barrier_value(s, params);
    const Control target{params.v_des, proposal.omega};
    if (out.h > 0.0) {
        out.control = target;
        return out;
    }
    out.active = true;

    ConstraintRow row = constraint_coefficients(s, params);
    // Coefficients that cannot move a.u by more than rounding noise across the
    // box are treated as zero, otherwise head-on geometry pins omega to a bound
    // for a 1e-17 gain in violation.
    if (std::abs(row.a_v) * (params.v_bounds.hi - params.v_bounds.lo) < kNegligible) row.a_v = 0.0;
    if (std::abs(row.a_omega) * (params.omega_bounds.hi - params.omega_bounds.lo) < kNegligible) row.a_omega = 0.0;
    const double rhs = -params.class_k(out.h);
    if (row.is_zero()) {
        out.control = target;
        out.slack = rhs;
        out.degenerate = true;
        return out;
    }

    if (row.dot(target) >= rhs) {
        out.control = target;
        return out;
    }

    const Control corner = box_maximizer(row, target, params);
    const double reach = row.dot(corner);
    if (reach <= rhs) {
        // Constraint cannot be met inside the box: take the least-violating point.
        out.control = corner;
        out.slack = rhs - reach;
        return out;
    }

    const auto cost = [&](const Control& u) {
        const double dv = u.v - params.v_des;
        const double dw = u.omega - target.omega;
        return params.kappa * dv * dv + dw * dw;
    };
    const double tol = 1e-12;
    const auto in_box = [&](const Control& u) {
        return u.v >= params.v_bounds.lo - tol && u.v <= params.v_bounds.hi + tol &&
               u.omega >= params.omega_bounds.lo - tol && u.omega <= params.omega_bounds.hi + tol;
    };

    Control best = corner;
    double best_cost = cost(corner);
    const auto consider = [&](const Control& u) {
        if (!in_box(u)) return;
        const double c = cost(u);
        if (c < best_cost) {
            best = u;
            best_cost = c;
        }
    };

    // Constraint alone: projection of the target onto the line in the kappa-weighted metric.
    {
        const double denom = row.a_v * row.a_v / params.kappa + row.a_omega * row.a_omega;
        const double t = (rhs - row.dot(target)) / denom;
        consider({target.v + t * row.a_v / params.kappa, target.omega + t * row.a_omega});
    }
    // Constraint together with one bound.
    if (row.a_omega != 0.0) {
        for (double v : {params.v_bounds.lo, params.v_bounds.hi})
            consider({v, (rhs - row.a_v * v) / row.a_omega});
    }
    if (row.a_v != 0.0) {
        for (double w : {params.omega_bounds.lo, params.omega_bounds.hi})
            consider({(rhs - row.a_omega * w) / row.a_v, w});
    }

    out.control = {params.v_bounds.clamp(best.v), params.omega_bounds.clamp(best.omega)};
    return out;
}

}  // namespace cbfrl

#pragma once

#include <Eigen/Core>

#include "cbfrl/kinematics.hpp"

namespace cbfrl {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double value) const { return value >= lo && value <= hi; }
    double clamp(double value) const { return value < lo ? lo : (value > hi ? hi : value); }
};

// Barrier configuration for one circular obstacle.
struct CbfParams {
    Eigen::Vector2d obstacle_center = Eigen::Vector2d::Zero();
    double delta = 0.45;        // safe distance [m]
    double epsilon = 0.05;      // heading-axis shift of the reference point [m]
    double alpha_gain = 1.0;    // linear class-K gain, alpha(h) = gain * h
    double kappa = 500.0;       // priority weight on linear-velocity deviation
    Interval v_bounds{0.0, 0.2};
    Interval omega_bounds{-0.7, 0.7};
    double v_des = 0.2;
    double slack_weight = 1e4;

    // Throws std::invalid_argument on the first violated invariant.
    void validate() const;

    double class_k(double h) const { return alpha_gain * h; }
};

// Coefficients of the linear constraint a_v * v + a_omega * omega >= -alpha(h).
struct ConstraintRow {
    double a_v = 0.0;
    double a_omega = 0.0;

    double dot(const Control& u) const { return a_v * u.v + a_omega * u.omega; }
    bool is_zero() const { return a_v == 0.0 && a_omega == 0.0; }
};

struct SafeControl {
    Control control;
    double h = 0.0;
    bool active = false;      // guardrail engaged, i.e. h <= 0
    double slack = 0.0;       // relaxation needed when the box cannot satisfy the constraint
    bool degenerate = false;  // shifted point at the obstacle center; no first-order safe direction
};

// h = ||x' - x0||^2 - (delta + epsilon)^2 evaluated at the shifted point x'.
double barrier_value(const UnicycleState& s, const CbfParams& params);

// (a_v, a_omega) = 2 (x' - x0)^T R(theta) diag(1, epsilon), so that hdot = a_v v + a_omega omega.
ConstraintRow constraint_coefficients(const UnicycleState& s, const CbfParams& params);

// Violation of the barrier constraint at u: max(0, -alpha(h) - a.u).
double implied_slack(const ConstraintRow& row, double h, const Control& u, const CbfParams& params);

// kappa (v - v_des)^2 + (omega - omega_pi)^2 + M slack^2.
double penalized_objective(const Control& u, double slack, double omega_pi, const CbfParams& params);

// Priority-weighted safety QP.
//
// With h > 0 the proposal passes through as (v_des, omega_pi). With h <= 0 the
// solver first computes the smallest constraint violation reachable inside the
// velocity box (zero whenever the hard constraint is feasible), then returns the
// exact minimizer of kappa (v - v_des)^2 + (omega - omega_pi)^2 over the box
// subject to the correspondingly relaxed constraint. The feasible region is a box
// cut by one half-plane, so the minimizer is found by enumerating the handful of
// active sets: none, the constraint alone, and the constraint with one bound.
//
// proposal.omega must already lie in params.omega_bounds; proposal.v is not used.
SafeControl solve_safe_control(const UnicycleState& s, const Control& proposal, const CbfParams& params);

}  // namespace cbfrl

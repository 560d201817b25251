#pragma once

#include <Eigen/Core>

namespace cbfrl {

// Planar pose of the agent. theta is kept in (-pi, pi].
struct UnicycleState {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Eigen::Vector2d position() const { return {x, y}; }
};

// Linear velocity [m/s] and angular velocity [rad/s].
struct Control {
    double v = 0.0;
    double omega = 0.0;
};

// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

// Local-to-global rotation R(theta).
Eigen::Matrix2d rotation_matrix(double theta);

// Forward-Euler unicycle update; heading is wrapped afterwards.
UnicycleState step(const UnicycleState& s, const Control& u, double dt);

// Point shifted epsilon along the heading axis: x + R(theta) [epsilon, 0]^T.
Eigen::Vector2d shifted_point(const UnicycleState& s, double epsilon);

// Expresses a world point in the agent frame: R(theta)^T (p - x).
Eigen::Vector2d to_agent_frame(const UnicycleState& s, const Eigen::Vector2d& p_world);

}  // namespace cbfrl

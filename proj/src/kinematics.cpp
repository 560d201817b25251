#include "cbfrl/kinematics.hpp"

#include <cmath>
#include <numbers>

namespace cbfrl {

double wrap_angle(double angle) {
    double r = std::remainder(angle, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
    return r;
}

Eigen::Matrix2d rotation_matrix(double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Eigen::Matrix2d r;
    r << c, -s,
         s, c;
    return r;
}

UnicycleState step(const UnicycleState& s, const Control& u, double dt) {
    UnicycleState next;
    next.x = s.x + u.v * std::cos(s.theta) * dt;
    next.y = s.y + u.v * std::sin(s.theta) * dt;
    next.theta = wrap_angle(s.theta + u.omega * dt);
    return next;
}

Eigen::Vector2d shifted_point(const UnicycleState& s, double epsilon) {
    return {s.x + epsilon * std::cos(s.theta), s.y + epsilon * std::sin(s.theta)};
}

Eigen::Vector2d to_agent_frame(const UnicycleState& s, const Eigen::Vector2d& p_world) {
    const double c = std::cos(s.theta);
    const double sn = std::sin(s.theta);
    const double dx = p_world.x() - s.x;
    const double dy = p_world.y() - s.y;
    return {c * dx + sn * dy, -sn * dx + c * dy};
}

}  // namespace cbfrl

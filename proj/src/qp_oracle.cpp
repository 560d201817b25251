#include "cbfrl/qp_oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace cbfrl {

namespace {

constexpr double kCoarseStep = 1e-3;
constexpr double kFeasTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Grid over [lo, hi] with the given spacing, anchored at lo and always
// containing hi.
std::vector<double> grid(double lo, double hi, double step) {
    std::vector<double> values;
    const auto n = static_cast<long>(std::floor((hi - lo) / step));
    for (long i = 0; i <= n; ++i) {
        const double v = lo + static_cast<double>(i) * step;
        if (v < hi) values.push_back(v);
    }
    values.push_back(hi);
    return values;
}

// Minimizes a convex (possibly +inf valued) function of one variable over a
// box by grid search: a full grid at `coarse`, then grids ten times finer on
// the two cells bracketing the incumbent until `fine` is reached. For a convex
// function the minimizer always lies within one cell of the grid argmin.
template <typename F>
std::pair<double, double> refine_1d(const Interval& box, double coarse, double fine, F&& f) {
    double best_x = box.lo;
    double best_f = kInf;
    double step = coarse;
    std::vector<double> xs = grid(box.lo, box.hi, step);
    while (true) {
        for (double x : xs) {
            const double fx = f(x);
            if (fx < best_f) {
                best_f = fx;
                best_x = x;
            }
        }
        if (step <= fine * (1.0 + 1e-9)) break;
        const double lo = std::max(box.lo, best_x - step);
        const double hi = std::min(box.hi, best_x + step);
        step = std::max(step / 10.0, fine);
        xs = grid(lo, hi, step);
    }
    return {best_x, best_f};
}

}  // namespace

Control oracle_solve(const UnicycleState& s, const Control& proposal, const CbfParams& params,
                     double resolution) {
    const double h = barrier_value(s, params);
    const double omega_pi = proposal.omega;
    if (h > 0.0) return {params.v_des, omega_pi};

    const ConstraintRow row = constraint_coefficients(s, params);
    const double coarse = std::max(resolution, kCoarseStep);

    // Smallest violation reachable on the grid; a linear function peaks at a
    // box corner and the corners are grid points.
    double min_slack = kInf;
    for (double v : grid(params.v_bounds.lo, params.v_bounds.hi, coarse))
        for (double w : grid(params.omega_bounds.lo, params.omega_bounds.hi, coarse))
            min_slack = std::min(min_slack, implied_slack(row, h, {v, w}, params));
    const double admissible = min_slack + kFeasTol;

    const auto objective = [&](double v, double w) {
        const double slack = implied_slack(row, h, {v, w}, params);
        if (slack > admissible) return kInf;
        return penalized_objective({v, w}, slack, omega_pi, params);
    };
    // Partial minimization over omega keeps the profile in v convex.
    const auto best_omega = [&](double v) {
        return refine_1d(params.omega_bounds, coarse, resolution, [&](double w) { return objective(v, w); });
    };
    const auto [v_star, unused] =
        refine_1d(params.v_bounds, coarse, resolution, [&](double v) { return best_omega(v).second; });
    (void)unused;
    return {v_star, best_omega(v_star).first};
}

OracleSuiteReport run_oracle_suite(std::size_t instances, unsigned long long seed, double resolution) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    OracleSuiteReport report;
    report.min_constraint_residual = kInf;
    CbfParams params;
    const double radius = params.delta + params.epsilon;
    while (report.instances < instances) {
        // Shifted point uniform in the unsafe disc, heading uniform.
        const double r = radius * std::sqrt(unit(rng));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        const double theta = wrap_angle(2.0 * std::numbers::pi * unit(rng));
        UnicycleState st;
        st.theta = theta;
        st.x = r * std::cos(phi) - params.epsilon * std::cos(theta);
        st.y = r * std::sin(phi) - params.epsilon * std::sin(theta);
        const double h = barrier_value(st, params);
        if (h > 0.0) continue;
        const Control proposal{params.v_des,
                               params.omega_bounds.lo + unit(rng) * (params.omega_bounds.hi - params.omega_bounds.lo)};

        const SafeControl analytic = solve_safe_control(st, proposal, params);
        const Control reference = oracle_solve(st, proposal, params, resolution);
        const ConstraintRow row = constraint_coefficients(st, params);

        const double obj_a = penalized_objective(analytic.control, analytic.slack, proposal.omega, params);
        const double ref_slack = implied_slack(row, h, reference, params);
        const double obj_o = penalized_objective(reference, ref_slack, proposal.omega, params);
        report.max_objective_gap = std::max(report.max_objective_gap, std::abs(obj_a - obj_o));
        report.min_constraint_residual =
            std::min(report.min_constraint_residual, row.dot(analytic.control) + analytic.slack + params.class_k(h));
        ++report.instances;
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace cbfrl

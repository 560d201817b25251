#pragma once

#include <cstddef>

#include "cbfrl/cbf.hpp"

namespace cbfrl {

// Brute-force reference for solve_safe_control.
//
// Grid search over the (v, omega) box with the slack implied at every grid point.
// The smallest violation reachable on the grid is found first; the objective is
// then minimized over grid points that do not exceed it. The search runs as a
// nested pair of one-dimensional grid refinements (omega inside v), each starting
// at 1e-3 over the whole interval and shrinking tenfold around the incumbent down
// to `resolution`. Both profiles are convex, which keeps the refinement from
// losing the minimizer.
Control oracle_solve(const UnicycleState& s, const Control& proposal, const CbfParams& params,
                     double resolution);

struct OracleSuiteReport {
    std::size_t instances = 0;
    double max_objective_gap = 0.0;
    double min_constraint_residual = 0.0;  // min of a.u + slack + alpha(h) over the analytic solutions
    double seconds = 0.0;
};

// Random activated instances (h <= 0) compared against the grid oracle.
OracleSuiteReport run_oracle_suite(std::size_t instances, unsigned long long seed, double resolution);

}  // namespace cbfrl

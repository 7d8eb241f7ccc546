#pragma once

#include "roughcal/system.hpp"

#include <functional>
#include <string>

namespace roughcal {

struct SolverConfig {
    double eps_f = 1e-7;   // m^3/s
    double eps_x = 1e-9;
    int max_iter = 300;
    double mu_min = 1e-8;
    bool scaling_enabled = true;
    double backtrack_factor = 0.5;

    void check() const;
};

enum class Termination {
    converged,
    small_step,
    line_search_failed,
    max_iter,
    singular,
    non_finite,
    start_failed,
};

std::string to_string(Termination t);

struct SolveResult {
    Vec x;
    Vec f;
    double v = 0.0;
    int iterations = 0;
    Termination reason = Termination::max_iter;
};

// Least-squares Newton step -(J^T J)^{-1} J^T f.
Vec newton_direction(const Mat& J, const Vec& f);

using DirectionFn = std::function<Vec(const Vec& x, const ResidualReport& r)>;

// Damped iteration x <- clamp(x + mu dx) with backtracking on the L1 residual.
SolveResult descend(const Problem& pb, const CalibrationState& x0, const SolverConfig& cfg,
                    const DirectionFn& direction);

SolveResult solve_newton(const Problem& pb, const CalibrationState& x0, const SolverConfig& cfg);

}  // namespace roughcal

#pragma once

#include <functional>

#include "thinlimit/common.hpp"

namespace thinlimit {

struct OptimizerParams {
    int max_iters = 2000;
    double grad_tol = 1e-7;  // on the gradient 2-norm of the volume-averaged energy
    int memory = 10;         // quasi-Newton history length
    double armijo_c = 1e-4;
    double shrink = 0.5;
    int restarts = 3;           // total runs; run 0 starts unperturbed
    double perturb_amp = 0.05;  // relative to the spread of the boundary data
    uint64_t seed = 0;
    bool parallel_restarts = true;

    void validate() const {
        if (max_iters <= 0 || grad_tol <= 0 || memory <= 0 || restarts < 1 ||
            armijo_c <= 0 || shrink <= 0 || shrink >= 1)
            throw UsageError("OptimizerParams: all parameters must be positive");
    }
};

struct IterRow {
    int iter = 0;
    double energy = 0;
    double grad_norm = 0;
    double step = 0;
};

struct MinimizeResult {
    double energy = 0;
    double grad_norm = 0;
    int iterations = 0;
    int best_restart = 0;
    double wall_time_s = 0;
    int clamp_warnings = 0;
    bool converged = false;
    std::vector<IterRow> log;  // of the best restart
};

// value + gradient of a smooth objective on R^d.
using ObjectiveFn = std::function<double(const Vector& x, Vector& grad)>;

struct LbfgsResult {
    Vector x;
    double value = 0;
    double grad_norm = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<IterRow> log;
};

// Limited-memory BFGS with Armijo backtracking. Accepted energies are
// monotone non-increasing; stops at grad_tol, max_iters, or a line-search
// failure at the minimum step (converged = false in the latter case).
LbfgsResult lbfgs_minimize(const ObjectiveFn& fn, const Vector& x0,
                           const OptimizerParams& params, bool keep_log = false);

}  // namespace thinlimit

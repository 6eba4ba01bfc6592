#pragma once

#include "thinlimit/fields.hpp"
#include "thinlimit/optimizer.hpp"

namespace thinlimit {

// value + gradient of an assembled energy; gradient rows of fixed nodes
// must come back zeroed (the assemblers guarantee this).
using EnergyFn = std::function<double(const ConfigurationField&, Matrix* grad)>;

// Quasi-Newton minimization over the free DOFs; fixed DOFs are untouched.
// Restart 0 starts from F0, later restarts perturb the free values by
// perturb_amp times the spread of the boundary data; the best run wins.
std::pair<ConfigurationField, MinimizeResult> minimize_energy(const EnergyFn& energy,
                                                              const ConfigurationField& F0,
                                                              const OptimizerParams& params);

// Max relative error between analytic directional derivatives and central
// finite differences (step 1e-6, scaled) along random unit directions in
// the free subspace.
double gradient_check(const EnergyFn& energy, const ConfigurationField& F, int n_dirs,
                      uint64_t seed);

}  // namespace thinlimit

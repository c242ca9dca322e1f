#pragma once

#include <cstdint>

#include "gaitopt/gp.hpp"
#include "gaitopt/hyperprior.hpp"
#include "gaitopt/kernels.hpp"

namespace gaitopt {

struct MapFitOptions {
    int restarts = 8;         ///< multistart count (includes the two fixed starts)
    int max_iterations = 60;  ///< ascent iterations per start
    double grad_tol = 1e-5;   ///< stop when the log-space gradient is this small
    std::uint64_t seed = 0;   ///< seeds the randomized restarts
};

struct MapFitResult {
    Hyperparams hp;        ///< maximizer (never worse than the input)
    double objective = 0.0; ///< log marginal likelihood + log hyperprior
    bool improved = false; ///< objective strictly better than at the input hp
};

/// Penalized log marginal likelihood: LML plus the hyperprior log density of
/// the free parameters (natural units). Noise and prior mean stay fixed.
double map_objective(const Hyperparams& hp, const HyperPriorSet& priors,
                     const SearchBox& box, const Dataset& data);

/// Gradient of map_objective with respect to the log of the free
/// parameters, evaluated at hp.
Eigen::VectorXd map_objective_log_grad(const Hyperparams& hp,
                                       const HyperPriorSet& priors,
                                       const SearchBox& box,
                                       const Dataset& data);

/// MAP-II hyperparameter fit: multistart gradient ascent in log parameter
/// space with Armijo backtracking. Deterministic for a fixed seed.
MapFitResult map_fit(const Hyperparams& initial, const HyperPriorSet& priors,
                     const SearchBox& box, const Dataset& data,
                     const MapFitOptions& options = {});

} // namespace gaitopt

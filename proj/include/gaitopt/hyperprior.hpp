#pragma once

#include <vector>

#include <Eigen/Core>

#include "gaitopt/kernels.hpp"

namespace gaitopt {

/// Gaussian prior over one hyperparameter, in natural (not log) units.
/// Width defaults to a quarter of the mean so the prior is informative but
/// not rigid.
struct HyperPrior {
    double mean = 1.0;
    double std = 0.25;

    static HyperPrior from_estimate(double mean) {
        return {mean, mean / 4.0};
    }

    double log_density(double x) const;
};

/// One prior per free hyperparameter, aligned with pack_free_params order.
struct HyperPriorSet {
    std::vector<HyperPrior> priors;

    /// Priors centered on the default hyperparameters for `kind`:
    /// length scales at a quarter of the normalized box, signal amplitude at
    /// `signal_std_estimate` (split across summands for composite kernels).
    static HyperPriorSet defaults(KernelKind kind,
                                  double signal_std_estimate = 2.0);

    double log_density_sum(const Eigen::VectorXd& natural_params) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& natural_params) const;
};

} // namespace gaitopt

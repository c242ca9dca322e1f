#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gaitopt/params.hpp"

namespace gaitopt {

enum class KernelKind {
    SquaredExponential,
    RationalQuadratic,
    Matern32,
    Matern52,
    TwoMatern, ///< sum of a Matern-5/2 and a Matern-3/2 with independent scales
};

const char* kernel_name(KernelKind kind);
KernelKind kernel_from_name(const std::string& name);

/// Length scales and signal amplitude of one covariance summand. Length
/// scales live in normalized [0,1] box coordinates.
struct ComponentHyperparams {
    std::array<double, 2> length_scales{0.25, 0.25}; // {wavelength, duty}
    double signal_std = 2.0;

    friend bool operator==(const ComponentHyperparams&,
                           const ComponentHyperparams&) = default;
};

/// Full hyperparameter set of a GP model. Plain kernels use components[0];
/// TwoMatern uses components[0] for the Matern-5/2 summand and components[1]
/// for the Matern-3/2 summand.
struct Hyperparams {
    KernelKind kind = KernelKind::SquaredExponential;
    std::vector<ComponentHyperparams> components{ComponentHyperparams{}};
    double rq_alpha = 2.0;   ///< shape of the rational-quadratic kernel
    double noise_std = 0.1;  ///< observation noise, cost units
    double mean_const = 2.0; ///< constant prior mean, cost units

    void validate() const;

    /// Total prior standard deviation at a point (sqrt of summed variances).
    double total_signal_std() const;

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Default hyperparameters for a kernel: length scales a quarter of the
/// (normalized) box, signal amplitude `signal_std` split evenly across
/// summands so the total prior variance matches.
Hyperparams default_hyperparams(KernelKind kind, double signal_std = 2.0,
                                double noise_std = 0.1,
                                double mean_const = 2.0);

/// Covariance between two points in normalized box coordinates.
double kernel_eval_nd(const Hyperparams& hp, const std::array<double, 2>& u,
                      const std::array<double, 2>& v);

/// Covariance between two controller settings; `box` supplies the
/// normalization.
double kernel_eval(const Hyperparams& hp, const ControllerParams& a,
                   const ControllerParams& b, const SearchBox& box);

// --- free-parameter view used by MAP fitting ---------------------------
//
// The optimizer sees a flat vector of the tunable hyperparameters in
// natural units (noise and prior mean stay fixed):
//   SE / M32 / M52:  l_wl, l_duty, sigma
//   RQ:              l_wl, l_duty, sigma, alpha
//   TwoMatern:       l_wl52, l_duty52, sigma52, l_wl32, l_duty32, sigma32

int free_param_count(KernelKind kind);
std::vector<std::string> free_param_names(KernelKind kind);
Eigen::VectorXd pack_free_params(const Hyperparams& hp);
Hyperparams unpack_free_params(const Hyperparams& tmpl,
                               const Eigen::VectorXd& v);

/// Covariance plus its gradient with respect to the free parameters
/// (natural units, same order as pack_free_params).
struct KernelValueGrad {
    double value = 0.0;
    Eigen::VectorXd grad;
};
KernelValueGrad kernel_eval_with_grad(const Hyperparams& hp,
                                      const std::array<double, 2>& u,
                                      const std::array<double, 2>& v);

} // namespace gaitopt

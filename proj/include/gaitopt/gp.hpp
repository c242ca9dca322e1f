#pragma once

#include <array>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gaitopt/kernels.hpp"
#include "gaitopt/params.hpp"

namespace gaitopt {

/// One evaluated controller setting.
struct Observation {
    ControllerParams params;
    double cost = 0.0; ///< objective value, cost units (%BL/s)

    friend bool operator==(const Observation&, const Observation&) = default;
};

struct Dataset {
    std::vector<Observation> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    void add(const ControllerParams& p, double cost) {
        points.push_back({p, cost});
    }
};

struct PosteriorStats {
    double mean = 0.0;
    double variance = 0.0;
};

std::vector<std::array<double, 2>> normalized_inputs(const SearchBox& box,
                                                     const Dataset& data);

/// Training covariance K(X,X) + noise_std^2 I over normalized inputs.
Eigen::MatrixXd gram_matrix(const Hyperparams& hp,
                            const std::vector<std::array<double, 2>>& u);

/// GP posterior conditioned on a dataset. Factorizes the training
/// covariance once; predictions are O(N) mean / O(N^2) variance.
///
/// A diagonal jitter of 1e-10 of the prior signal variance is always added;
/// if the Cholesky factorization still fails it escalates tenfold up to
/// 1e-4 of the signal variance before giving up with ConditioningError.
class Posterior {
  public:
    Posterior(const Hyperparams& hp, const SearchBox& box,
              const Dataset& data);

    PosteriorStats stats(const ControllerParams& p) const;
    PosteriorStats stats_nd(const std::array<double, 2>& u) const;

    /// Joint posterior over a set of normalized points.
    void joint_nd(const std::vector<std::array<double, 2>>& pts,
                  Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const;

    /// K^-1 K(X, pts): per-point solve against the training covariance,
    /// reusable across many point_vs_set_nd calls (empty data -> 0 x pts).
    Eigen::MatrixXd cross_solve_nd(
        const std::vector<std::array<double, 2>>& pts) const;

    /// Stats of one point plus its posterior cross-covariance with a point
    /// set, using a precomputed cross_solve_nd(pts) result.
    void point_vs_set_nd(const std::array<double, 2>& u,
                         const std::vector<std::array<double, 2>>& pts,
                         const Eigen::MatrixXd& cross_solve, double& mean,
                         double& var, Eigen::VectorXd& cross) const;

    double log_marginal_likelihood() const { return lml_; }
    double jitter() const { return jitter_; }
    std::size_t size() const { return u_.size(); }
    const Hyperparams& hyperparams() const { return hp_; }
    const SearchBox& box() const { return box_; }

  private:
    Hyperparams hp_;
    SearchBox box_;
    std::vector<std::array<double, 2>> u_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_; // K^-1 (y - mean)
    double jitter_ = 0.0;
    double lml_ = 0.0;
};

/// Log marginal likelihood of the data under the model (convenience).
double log_marginal_likelihood(const Hyperparams& hp, const SearchBox& box,
                               const Dataset& data);

} // namespace gaitopt

#include "gaitopt/gp.hpp"

#include <cmath>

#include "gaitopt/errors.hpp"

namespace gaitopt {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

std::vector<std::array<double, 2>> normalized_inputs(const SearchBox& box,
                                                     const Dataset& data) {
    std::vector<std::array<double, 2>> u;
    u.reserve(data.size());
    for (const auto& obs : data.points) u.push_back(box.normalized(obs.params));
    return u;
}

Eigen::MatrixXd gram_matrix(const Hyperparams& hp,
                            const std::vector<std::array<double, 2>>& u) {
    const Eigen::Index n = static_cast<Eigen::Index>(u.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double k = kernel_eval_nd(hp, u[i], u[j]);
            K(i, j) = k;
            K(j, i) = k;
        }
        K(i, i) += hp.noise_std * hp.noise_std;
    }
    return K;
}

Posterior::Posterior(const Hyperparams& hp, const SearchBox& box,
                     const Dataset& data)
    : hp_(hp), box_(box) {
    hp_.validate();
    box_.validate();
    u_ = normalized_inputs(box_, data);
    const Eigen::Index n = static_cast<Eigen::Index>(u_.size());
    if (n == 0) return; // prior-only model

    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i)
        y[i] = data.points[static_cast<std::size_t>(i)].cost - hp_.mean_const;

    const Eigen::MatrixXd K = gram_matrix(hp_, u_);
    const double sigvar =
        hp_.total_signal_std() * hp_.total_signal_std();
    double jitter = 1e-10 * sigvar;
    for (;;) {
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += jitter;
        llt_.compute(Kj);
        if (llt_.info() == Eigen::Success) break;
        jitter *= 10.0;
        if (jitter > 1e-4 * sigvar)
            throw ConditioningError(
                "covariance not positive definite after jitter escalation");
    }
    jitter_ = jitter;
    alpha_ = llt_.solve(y);

    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        logdet += std::log(llt_.matrixL()(i, i));
    lml_ = -0.5 * y.dot(alpha_) - logdet -
           0.5 * static_cast<double>(n) * kLog2Pi;
}

PosteriorStats Posterior::stats_nd(const std::array<double, 2>& u) const {
    const Eigen::Index n = static_cast<Eigen::Index>(u_.size());
    const double prior_var = kernel_eval_nd(hp_, u, u);
    if (n == 0) return {hp_.mean_const, prior_var};

    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i)
        k[i] = kernel_eval_nd(hp_, u, u_[static_cast<std::size_t>(i)]);
    Eigen::VectorXd v = llt_.solve(k);
    double var = prior_var - k.dot(v);
    return {hp_.mean_const + k.dot(alpha_), std::fmax(var, 0.0)};
}

PosteriorStats Posterior::stats(const ControllerParams& p) const {
    return stats_nd(box_.normalized(p));
}

void Posterior::joint_nd(const std::vector<std::array<double, 2>>& pts,
                         Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const {
    const Eigen::Index r = static_cast<Eigen::Index>(pts.size());
    const Eigen::Index n = static_cast<Eigen::Index>(u_.size());
    mean.resize(r);
    cov.resize(r, r);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            double k = kernel_eval_nd(hp_, pts[static_cast<std::size_t>(i)],
                                      pts[static_cast<std::size_t>(j)]);
            cov(i, j) = k;
            cov(j, i) = k;
        }
    if (n == 0) {
        mean.setConstant(hp_.mean_const);
        return;
    }
    Eigen::MatrixXd Kxs(n, r);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < r; ++j)
            Kxs(i, j) = kernel_eval_nd(hp_, u_[static_cast<std::size_t>(i)],
                                       pts[static_cast<std::size_t>(j)]);
    mean = Eigen::VectorXd::Constant(r, hp_.mean_const) +
           Kxs.transpose() * alpha_;
    Eigen::MatrixXd V = llt_.solve(Kxs);
    cov -= Kxs.transpose() * V;
    cov = 0.5 * (cov + cov.transpose()).eval(); // re-symmetrize
}

Eigen::MatrixXd Posterior::cross_solve_nd(
    const std::vector<std::array<double, 2>>& pts) const {
    const Eigen::Index n = static_cast<Eigen::Index>(u_.size());
    const Eigen::Index r = static_cast<Eigen::Index>(pts.size());
    if (n == 0) return Eigen::MatrixXd(0, r);
    Eigen::MatrixXd Kxs(n, r);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < r; ++j)
            Kxs(i, j) = kernel_eval_nd(hp_, u_[static_cast<std::size_t>(i)],
                                       pts[static_cast<std::size_t>(j)]);
    return llt_.solve(Kxs);
}

void Posterior::point_vs_set_nd(const std::array<double, 2>& u,
                                const std::vector<std::array<double, 2>>& pts,
                                const Eigen::MatrixXd& cross_solve,
                                double& mean, double& var,
                                Eigen::VectorXd& cross) const {
    const Eigen::Index n = static_cast<Eigen::Index>(u_.size());
    const Eigen::Index r = static_cast<Eigen::Index>(pts.size());
    cross.resize(r);
    for (Eigen::Index j = 0; j < r; ++j)
        cross[j] = kernel_eval_nd(hp_, u, pts[static_cast<std::size_t>(j)]);
    if (n == 0) {
        mean = hp_.mean_const;
        var = kernel_eval_nd(hp_, u, u);
        return;
    }
    Eigen::VectorXd ku(n);
    for (Eigen::Index i = 0; i < n; ++i)
        ku[i] = kernel_eval_nd(hp_, u, u_[static_cast<std::size_t>(i)]);
    mean = hp_.mean_const + ku.dot(alpha_);
    var = std::fmax(kernel_eval_nd(hp_, u, u) - ku.dot(llt_.solve(ku)), 0.0);
    cross -= cross_solve.transpose() * ku;
}

double log_marginal_likelihood(const Hyperparams& hp, const SearchBox& box,
                               const Dataset& data) {
    return Posterior(hp, box, data).log_marginal_likelihood();
}

} // namespace gaitopt

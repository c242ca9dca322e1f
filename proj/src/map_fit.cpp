#include "gaitopt/map_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Cholesky>

#include "gaitopt/errors.hpp"

namespace gaitopt {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kLogMin = -10.0; // natural-parameter bounds, log units
constexpr double kLogMax = 10.0;

// LML value and (optionally) its gradient w.r.t. the free parameters in
// natural units: d/dtheta = 0.5 tr((aa' - K^-1) dK/dtheta).
double lml_with_grad(const Hyperparams& hp,
                     const std::vector<std::array<double, 2>>& u,
                     const Eigen::VectorXd& y, Eigen::VectorXd* grad) {
    const Eigen::Index n = static_cast<Eigen::Index>(u.size());
    const int np = free_param_count(hp.kind);
    if (grad) grad->setZero(np);
    if (n == 0) return 0.0;

    Eigen::MatrixXd K(n, n);
    std::vector<Eigen::MatrixXd> dK;
    if (grad) dK.assign(np, Eigen::MatrixXd(n, n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const auto& ui = u[static_cast<std::size_t>(i)];
            const auto& uj = u[static_cast<std::size_t>(j)];
            if (grad) {
                KernelValueGrad kg = kernel_eval_with_grad(hp, ui, uj);
                K(i, j) = K(j, i) = kg.value;
                for (int p = 0; p < np; ++p)
                    dK[p](i, j) = dK[p](j, i) = kg.grad[p];
            } else {
                K(i, j) = K(j, i) = kernel_eval_nd(hp, ui, uj);
            }
        }
        K(i, i) += hp.noise_std * hp.noise_std;
    }

    // Same jitter policy as Posterior so the MAP objective and the model
    // used for prediction agree numerically.
    const double sigvar = hp.total_signal_std() * hp.total_signal_std();
    double jitter = 1e-10 * sigvar;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (;;) {
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += jitter;
        llt.compute(Kj);
        if (llt.info() == Eigen::Success) break;
        jitter *= 10.0;
        if (jitter > 1e-4 * sigvar)
            return -std::numeric_limits<double>::infinity();
    }
    Eigen::VectorXd alpha = llt.solve(y);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        logdet += std::log(llt.matrixL()(i, i));
    double lml = -0.5 * y.dot(alpha) - logdet -
                 0.5 * static_cast<double>(n) * kLog2Pi;
    if (grad) {
        Eigen::MatrixXd Kinv =
            llt.solve(Eigen::MatrixXd::Identity(n, n));
        Eigen::MatrixXd W = alpha * alpha.transpose() - Kinv;
        for (int p = 0; p < np; ++p)
            (*grad)[p] = 0.5 * W.cwiseProduct(dK[p]).sum();
    }
    return lml;
}

struct Problem {
    const Hyperparams& tmpl;
    const HyperPriorSet& priors;
    std::vector<std::array<double, 2>> u;
    Eigen::VectorXd y;

    double value(const Eigen::VectorXd& vlog) const {
        Hyperparams hp = unpack_free_params(tmpl, vlog.array().exp());
        double f = lml_with_grad(hp, u, y, nullptr);
        if (!std::isfinite(f)) return f;
        return f + priors.log_density_sum(pack_free_params(hp));
    }

    // value and gradient w.r.t. log parameters
    double value_grad(const Eigen::VectorXd& vlog, Eigen::VectorXd& g) const {
        Eigen::VectorXd v = vlog.array().exp();
        Hyperparams hp = unpack_free_params(tmpl, v);
        Eigen::VectorXd glml;
        double f = lml_with_grad(hp, u, y, &glml);
        if (!std::isfinite(f)) {
            g.setZero(vlog.size());
            return f;
        }
        Eigen::VectorXd gprior = priors.gradient(v);
        g = (glml + gprior).cwiseProduct(v); // chain rule to log space
        return f + priors.log_density_sum(v);
    }
};

Eigen::VectorXd clamp_log(Eigen::VectorXd v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = std::fmin(std::fmax(v[i], kLogMin), kLogMax);
    return v;
}

// Gradient ascent with Armijo backtracking; returns best value found.
double ascend(const Problem& prob, Eigen::VectorXd& x,
              const MapFitOptions& opt) {
    Eigen::VectorXd g;
    double f = prob.value_grad(x, g);
    if (!std::isfinite(f)) return f;
    double step = 0.1;
    for (int it = 0; it < opt.max_iterations; ++it) {
        double gnorm = g.lpNorm<Eigen::Infinity>();
        if (gnorm < opt.grad_tol) break;
        double t = step;
        double g2 = g.squaredNorm();
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            Eigen::VectorXd xn = clamp_log(x + t * g);
            double fn = prob.value(xn);
            if (std::isfinite(fn) && fn >= f + 1e-4 * t * g2) {
                x = xn;
                f = prob.value_grad(x, g);
                step = std::fmin(t * 2.0, 1.0);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
    }
    return f;
}

} // namespace

double map_objective(const Hyperparams& hp, const HyperPriorSet& priors,
                     const SearchBox& box, const Dataset& data) {
    hp.validate();
    return log_marginal_likelihood(hp, box, data) +
           priors.log_density_sum(pack_free_params(hp));
}

Eigen::VectorXd map_objective_log_grad(const Hyperparams& hp,
                                       const HyperPriorSet& priors,
                                       const SearchBox& box,
                                       const Dataset& data) {
    hp.validate();
    Problem prob{hp, priors, normalized_inputs(box, data), {}};
    prob.y.resize(static_cast<Eigen::Index>(data.size()));
    for (Eigen::Index i = 0; i < prob.y.size(); ++i)
        prob.y[i] = data.points[static_cast<std::size_t>(i)].cost -
                    hp.mean_const;
    Eigen::VectorXd g;
    prob.value_grad(pack_free_params(hp).array().log(), g);
    return g;
}

MapFitResult map_fit(const Hyperparams& initial, const HyperPriorSet& priors,
                     const SearchBox& box, const Dataset& data,
                     const MapFitOptions& options) {
    initial.validate();
    if (priors.priors.size() !=
        static_cast<std::size_t>(free_param_count(initial.kind)))
        throw DomainError("hyperprior count does not match kernel");

    Problem prob{initial, priors, normalized_inputs(box, data), {}};
    prob.y.resize(static_cast<Eigen::Index>(data.size()));
    for (Eigen::Index i = 0; i < prob.y.size(); ++i)
        prob.y[i] = data.points[static_cast<std::size_t>(i)].cost -
                    initial.mean_const;

    const Eigen::VectorXd x_init =
        clamp_log(pack_free_params(initial).array().log());
    Eigen::VectorXd prior_means(x_init.size());
    for (Eigen::Index i = 0; i < prior_means.size(); ++i)
        prior_means[i] = std::log(std::fmax(priors.priors[i].mean, 1e-12));
    prior_means = clamp_log(prior_means);

    std::vector<Eigen::VectorXd> starts{x_init, prior_means};
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    while (static_cast<int>(starts.size()) < std::max(options.restarts, 2)) {
        Eigen::VectorXd s = prior_means;
        for (Eigen::Index i = 0; i < s.size(); ++i) s[i] += 0.25 * normal(rng);
        starts.push_back(clamp_log(s));
    }

    const double f_init = prob.value(x_init);
    MapFitResult best;
    best.hp = initial;
    best.objective = f_init;
    for (auto& s : starts) {
        Eigen::VectorXd x = s;
        double f = ascend(prob, x, options);
        if (std::isfinite(f) && f > best.objective) {
            best.objective = f;
            best.hp = unpack_free_params(initial, x.array().exp());
            best.improved = f > f_init;
        }
    }
    return best;
}

} // namespace gaitopt

#include "gaitopt/hyperprior.hpp"

#include <cmath>

#include "gaitopt/errors.hpp"

namespace gaitopt {

namespace {
constexpr double kLogSqrt2Pi = 0.9189385332046727; // log(sqrt(2*pi))
}

double HyperPrior::log_density(double x) const {
    double z = (x - mean) / std;
    return -0.5 * z * z - std::log(std) - kLogSqrt2Pi;
}

HyperPriorSet HyperPriorSet::defaults(KernelKind kind,
                                      double signal_std_estimate) {
    Hyperparams hp = default_hyperparams(kind, signal_std_estimate);
    Eigen::VectorXd means = pack_free_params(hp);
    HyperPriorSet set;
    set.priors.reserve(means.size());
    for (Eigen::Index i = 0; i < means.size(); ++i)
        set.priors.push_back(HyperPrior::from_estimate(means[i]));
    return set;
}

double HyperPriorSet::log_density_sum(const Eigen::VectorXd& p) const {
    if (static_cast<std::size_t>(p.size()) != priors.size())
        throw DomainError("hyperprior/parameter size mismatch");
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        s += priors[i].log_density(p[i]);
    return s;
}

Eigen::VectorXd HyperPriorSet::gradient(const Eigen::VectorXd& p) const {
    if (static_cast<std::size_t>(p.size()) != priors.size())
        throw DomainError("hyperprior/parameter size mismatch");
    Eigen::VectorXd g(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i)
        g[i] = -(p[i] - priors[i].mean) / (priors[i].std * priors[i].std);
    return g;
}

} // namespace gaitopt

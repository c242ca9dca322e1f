#include <doctest.h>

#include <cmath>

#include "gaitopt/gp.hpp"
#include "gaitopt/hyperprior.hpp"
#include "gaitopt/map_fit.hpp"
#include "gaitopt/rng.hpp"

using namespace gaitopt;

namespace {

Dataset bowl_dataset(const SearchBox& box, int n, std::uint64_t seed) {
    RandomStream rs(seed);
    Dataset d;
    for (int i = 0; i < n; ++i) {
        const ControllerParams p =
            box.denormalized({rs.uniform01(), rs.uniform01()});
        const auto u = box.normalized(p);
        const double bowl = 3.0 * ((u[0] - 0.3) * (u[0] - 0.3) +
                                   (u[1] - 0.7) * (u[1] - 0.7));
        d.add(p, 1.0 + bowl + 0.05 * rs.normal());
    }
    return d;
}

} // namespace

TEST_CASE("scalar hyperprior is a Gaussian log density in natural units") {
    HyperPrior pr{0.8, 0.2};
    const double at_mean = -std::log(0.2) - 0.5 * std::log(2.0 * M_PI);
    CHECK(pr.log_density(0.8) == doctest::Approx(at_mean).epsilon(1e-14));
    // One standard deviation away drops the density by exactly 1/2.
    CHECK(pr.log_density(1.0) == doctest::Approx(at_mean - 0.5).epsilon(1e-13));
    CHECK(HyperPrior::from_estimate(0.8).mean == doctest::Approx(0.8));
    CHECK(HyperPrior::from_estimate(0.8).std == doctest::Approx(0.2));
}

TEST_CASE("default hyperprior set is centered on the default "
          "hyperparameters") {
    const KernelKind kinds[] = {
        KernelKind::SquaredExponential, KernelKind::RationalQuadratic,
        KernelKind::Matern32, KernelKind::Matern52, KernelKind::TwoMatern};
    for (KernelKind kind : kinds) {
        const HyperPriorSet priors = HyperPriorSet::defaults(kind, 1.5);
        const Eigen::VectorXd center =
            pack_free_params(default_hyperparams(kind, 1.5));
        REQUIRE(static_cast<int>(priors.priors.size()) == center.size());
        for (int i = 0; i < center.size(); ++i) {
            CHECK(priors.priors[i].mean ==
                  doctest::Approx(center[i]).epsilon(1e-14));
            CHECK(priors.priors[i].std ==
                  doctest::Approx(center[i] / 4.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("hyperprior set density and gradient match the Gaussian formulas") {
    const HyperPriorSet priors = HyperPriorSet::defaults(KernelKind::Matern52);
    Eigen::VectorXd x(3);
    x << 0.31, 0.18, 2.4;

    double want = 0.0;
    for (int i = 0; i < 3; ++i) want += priors.priors[i].log_density(x[i]);
    CHECK(priors.log_density_sum(x) == doctest::Approx(want).epsilon(1e-14));

    const Eigen::VectorXd g = priors.gradient(x);
    for (int i = 0; i < 3; ++i) {
        const double m = priors.priors[i].mean;
        const double s = priors.priors[i].std;
        CHECK(g[i] == doctest::Approx(-(x[i] - m) / (s * s)).epsilon(1e-13));
    }
}

TEST_CASE("map objective is the log marginal likelihood plus the prior "
          "density") {
    SearchBox box;
    const Dataset data = bowl_dataset(box, 8, 4242);
    Hyperparams hp = default_hyperparams(KernelKind::Matern52, 1.5);
    hp.components[0].length_scales = {0.31, 0.22};
    const HyperPriorSet priors =
        HyperPriorSet::defaults(KernelKind::Matern52, 1.5);

    const double obj = map_objective(hp, priors, box, data);
    const double want = log_marginal_likelihood(hp, box, data) +
                        priors.log_density_sum(pack_free_params(hp));
    CHECK(obj == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("log-space objective gradient matches finite differences") {
    SearchBox box;
    const Dataset data = bowl_dataset(box, 7, 17);
    const KernelKind kinds[] = {KernelKind::SquaredExponential,
                                KernelKind::RationalQuadratic,
                                KernelKind::TwoMatern};
    for (KernelKind kind : kinds) {
        Hyperparams hp = default_hyperparams(kind, 1.4);
        const HyperPriorSet priors = HyperPriorSet::defaults(kind, 1.4);
        const Eigen::VectorXd g =
            map_objective_log_grad(hp, priors, box, data);
        const Eigen::VectorXd p0 = pack_free_params(hp);
        REQUIRE(g.size() == p0.size());
        for (int i = 0; i < p0.size(); ++i) {
            const double h = 1e-6;
            Eigen::VectorXd lp = p0.array().log();
            Eigen::VectorXd lpp = lp, lpm = lp;
            lpp[i] += h;
            lpm[i] -= h;
            const double fp = map_objective(
                unpack_free_params(hp, lpp.array().exp()), priors, box, data);
            const double fm = map_objective(
                unpack_free_params(hp, lpm.array().exp()), priors, box, data);
            CHECK(g[i] ==
                  doctest::Approx((fp - fm) / (2.0 * h)).epsilon(2e-5));
        }
    }
}

TEST_CASE("map fit improves a distorted start and never returns something "
          "worse") {
    SearchBox box;
    const Dataset data = bowl_dataset(box, 10, 31);
    const HyperPriorSet priors =
        HyperPriorSet::defaults(KernelKind::Matern52, 1.5);

    Hyperparams start = default_hyperparams(KernelKind::Matern52, 1.5);
    start.components[0].length_scales = {0.9, 0.02};
    start.components[0].signal_std = 0.3;

    MapFitOptions opt;
    opt.seed = 5;
    const MapFitResult res = map_fit(start, priors, box, data, opt);
    const double before = map_objective(start, priors, box, data);
    const double after = map_objective(res.hp, priors, box, data);

    CHECK(res.objective == doctest::Approx(after).epsilon(1e-10));
    CHECK(after >= before);
    CHECK(res.improved);
    CHECK(after > before + 1.0); // distorted start is badly miscalibrated

    // Fixed parameters stay fixed.
    CHECK(res.hp.noise_std == start.noise_std);
    CHECK(res.hp.mean_const == start.mean_const);
    CHECK(res.hp.kind == start.kind);
}

TEST_CASE("map fit is deterministic for a fixed seed") {
    SearchBox box;
    const Dataset data = bowl_dataset(box, 9, 8);
    const HyperPriorSet priors =
        HyperPriorSet::defaults(KernelKind::TwoMatern, 1.5);
    const Hyperparams start = default_hyperparams(KernelKind::TwoMatern, 1.5);

    MapFitOptions opt;
    opt.seed = 123;
    const MapFitResult a = map_fit(start, priors, box, data, opt);
    const MapFitResult b = map_fit(start, priors, box, data, opt);
    CHECK(pack_free_params(a.hp) == pack_free_params(b.hp));
    CHECK(a.objective == b.objective);

    opt.seed = 124;
    const MapFitResult c = map_fit(start, priors, box, data, opt);
    // A different seed may land elsewhere, but never below the start.
    CHECK(c.objective >= map_objective(start, priors, box, data));
}

TEST_CASE("map fit starting at the optimum reports no improvement") {
    SearchBox box;
    const Dataset data = bowl_dataset(box, 8, 55);
    const HyperPriorSet priors =
        HyperPriorSet::defaults(KernelKind::Matern32, 1.5);
    const Hyperparams start = default_hyperparams(KernelKind::Matern32, 1.5);

    MapFitOptions opt;
    opt.seed = 9;
    const MapFitResult first = map_fit(start, priors, box, data, opt);
    const MapFitResult second = map_fit(first.hp, priors, box, data, opt);
    CHECK(second.objective >= first.objective);
    CHECK(second.objective == doctest::Approx(first.objective).epsilon(1e-6));
}

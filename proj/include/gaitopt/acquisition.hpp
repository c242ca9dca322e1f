#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Core>

#include "gaitopt/gp.hpp"
#include "gaitopt/params.hpp"

namespace gaitopt {

enum class AcquisitionKind {
    ProbabilityOfImprovement,
    ExpectedImprovement,
    EntropySearch,
};

const char* acquisition_name(AcquisitionKind kind);
AcquisitionKind acquisition_from_name(const std::string& name);

struct AcquisitionConfig {
    AcquisitionKind kind = AcquisitionKind::ExpectedImprovement;
    double gamma = 0.9; ///< improvement threshold factor: improve below gamma*mu_star
    int es_representer_count = 100;
    int es_mc_samples = 512;

    void validate() const;
};

/// Best controller as judged by the posterior-mean minimum (not the best
/// observation).
struct Incumbent {
    ControllerParams theta_star;
    double mu_star = 0.0;
};

double normal_pdf(double z);
double normal_cdf(double z);

/// P(X < threshold), X ~ N(mean, var). Exact indicator in the var = 0 limit.
double probability_of_improvement(double mean, double var, double threshold);

/// E[max(threshold - X, 0)], X ~ N(mean, var); sigma*(z*Phi(z) + phi(z))
/// with z = (threshold - mean)/sigma. Exact hinge in the var = 0 limit.
double expected_improvement(double mean, double var, double threshold);

/// PI/EI utility of a posterior prediction against gamma*mu_star.
/// EntropySearch cannot be computed from point stats; use EsScorer.
double acq_value(const AcquisitionConfig& cfg, const PosteriorStats& post,
                 const Incumbent& inc);

struct MaximizeResult {
    ControllerParams params;
    double value = 0.0;
};

/// Deterministic box maximizer: coarse lattice scan (nx x ny), then
/// Nelder-Mead refinement (at most refine_max_evals evaluations each) from
/// the top_k lattice cells. Ties break toward the lexicographically lowest
/// (wavelength, duty) point.
MaximizeResult
maximize_on_box(const std::function<double(const ControllerParams&)>& f,
                const SearchBox& box, int nx = 41, int ny = 31, int top_k = 5,
                int refine_max_evals = 200);

/// Posterior-mean minimum via maximize_on_box on the negated mean.
Incumbent find_incumbent(const Posterior& post);

/// Entropy-search scorer: expected reduction, in nats, of the entropy of
/// the minimum-location distribution over a fixed representer lattice.
///
/// The minimum-location distribution is estimated by argmin counting over
/// joint posterior samples; the outcome expectation uses 9-node
/// Gauss-Hermite quadrature; hypothetical-outcome updates reuse common
/// random numbers so scores are comparable across candidates. Deterministic
/// given the seed.
class EsScorer {
  public:
    EsScorer(const Posterior& post, const AcquisitionConfig& cfg,
             std::uint64_t seed);

    double score(const ControllerParams& candidate) const;
    double base_entropy() const { return base_entropy_; }
    bool degenerate() const { return degenerate_; }

  private:
    const Posterior& post_;
    AcquisitionConfig cfg_;
    std::vector<std::array<double, 2>> reps_;
    Eigen::MatrixXd L_;       // Cholesky of representer posterior covariance
    Eigen::MatrixXd samples_; // base joint samples, reps x mc
    Eigen::MatrixXd z_;       // base standard normals, reps x mc
    Eigen::VectorXd z_extra_; // candidate-row standard normals, mc
    Eigen::VectorXd eps_;     // simulated observation noise, mc
    Eigen::MatrixXd cross_solve_; // K^-1 K(X, reps), n x reps
    double base_entropy_ = 0.0;
    bool degenerate_ = false;
};

/// One-shot convenience wrapper around EsScorer.
double es_score(const Posterior& post, const ControllerParams& candidate,
                const AcquisitionConfig& cfg, std::uint64_t seed);

/// Maximize the configured acquisition over the box. PI/EI compute the
/// incumbent internally (or use the one supplied); ES uses the seed for its
/// sampling machinery.
ControllerParams maximize_acq(const Posterior& post,
                              const AcquisitionConfig& cfg,
                              std::uint64_t es_seed = 0,
                              const Incumbent* incumbent = nullptr);

} // namespace gaitopt

#include "gaitopt/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "gaitopt/errors.hpp"
#include "gaitopt/rng.hpp"

namespace gaitopt {

const char* acquisition_name(AcquisitionKind kind) {
    switch (kind) {
    case AcquisitionKind::ProbabilityOfImprovement: return "pi";
    case AcquisitionKind::ExpectedImprovement: return "ei";
    case AcquisitionKind::EntropySearch: return "es";
    }
    throw DomainError("unknown acquisition kind");
}

AcquisitionKind acquisition_from_name(const std::string& name) {
    if (name == "pi") return AcquisitionKind::ProbabilityOfImprovement;
    if (name == "ei") return AcquisitionKind::ExpectedImprovement;
    if (name == "es") return AcquisitionKind::EntropySearch;
    throw DomainError("unknown acquisition name: " + name);
}

void AcquisitionConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw DomainError("gamma must be in (0, 1]");
    if (kind == AcquisitionKind::EntropySearch) {
        if (es_representer_count < 20)
            throw DomainError("entropy search needs >= 20 representer points");
        if (es_mc_samples < 1)
            throw DomainError("es_mc_samples must be positive");
    }
}

double normal_pdf(double z) {
    return 0.3989422804014327 * std::exp(-0.5 * z * z);
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

double probability_of_improvement(double mean, double var, double threshold) {
    if (var < 0.0) throw DomainError("negative variance");
    if (var == 0.0) return mean < threshold ? 1.0 : 0.0;
    double sigma = std::sqrt(var);
    return normal_cdf((threshold - mean) / sigma);
}

double expected_improvement(double mean, double var, double threshold) {
    if (var < 0.0) throw DomainError("negative variance");
    if (var == 0.0) return std::fmax(threshold - mean, 0.0);
    double sigma = std::sqrt(var);
    double z = (threshold - mean) / sigma;
    return sigma * (z * normal_cdf(z) + normal_pdf(z));
}

double acq_value(const AcquisitionConfig& cfg, const PosteriorStats& post,
                 const Incumbent& inc) {
    cfg.validate();
    double threshold = cfg.gamma * inc.mu_star;
    switch (cfg.kind) {
    case AcquisitionKind::ProbabilityOfImprovement:
        return probability_of_improvement(post.mean, post.variance, threshold);
    case AcquisitionKind::ExpectedImprovement:
        return expected_improvement(post.mean, post.variance, threshold);
    case AcquisitionKind::EntropySearch:
        throw DomainError("entropy search is not a point-stat utility; "
                          "use es_score / maximize_acq");
    }
    throw DomainError("unknown acquisition kind");
}

// --- box maximization ----------------------------------------------------

namespace {

// Deterministic Nelder-Mead (maximization via negation), box-projected.
MaximizeResult nelder_mead_refine(
    const std::function<double(const ControllerParams&)>& f,
    const SearchBox& box, const ControllerParams& start, double step_wl,
    double step_duty, int max_evals) {
    struct Vertex {
        ControllerParams p;
        double g; // negated objective
        long id;  // insertion order, stabilizes sorting ties
    };
    long next_id = 0;
    int evals = 0;
    auto eval = [&](ControllerParams p) {
        p = box.clamp(p);
        ++evals;
        return Vertex{p, -f(p), next_id++};
    };

    std::vector<Vertex> v;
    v.push_back(eval(start));
    v.push_back(eval({start.wavelength_um + step_wl, start.duty_cycle_pct}));
    v.push_back(eval({start.wavelength_um, start.duty_cycle_pct + step_duty}));

    const double wl_span = box.wavelength_max_um - box.wavelength_min_um;
    const double duty_span = box.duty_max_pct - box.duty_min_pct;
    auto order = [&] {
        std::sort(v.begin(), v.end(), [](const Vertex& a, const Vertex& b) {
            return std::tie(a.g, a.id) < std::tie(b.g, b.id);
        });
    };
    auto size_small = [&] {
        double d = 0.0;
        for (int i = 1; i < 3; ++i) {
            d = std::fmax(d, std::fabs(v[i].p.wavelength_um -
                                       v[0].p.wavelength_um) /
                                 wl_span);
            d = std::fmax(d, std::fabs(v[i].p.duty_cycle_pct -
                                       v[0].p.duty_cycle_pct) /
                                 duty_span);
        }
        return d < 1e-9;
    };

    order();
    while (evals < max_evals && !size_small()) {
        ControllerParams c{// centroid of the two best
                           0.5 * (v[0].p.wavelength_um + v[1].p.wavelength_um),
                           0.5 * (v[0].p.duty_cycle_pct + v[1].p.duty_cycle_pct)};
        const ControllerParams& w = v[2].p;
        auto along = [&](double t) {
            return ControllerParams{c.wavelength_um + t * (c.wavelength_um -
                                                           w.wavelength_um),
                                    c.duty_cycle_pct + t * (c.duty_cycle_pct -
                                                            w.duty_cycle_pct)};
        };
        Vertex r = eval(along(1.0)); // reflection
        if (r.g < v[0].g) {
            Vertex e = eval(along(2.0)); // expansion
            v[2] = e.g < r.g ? e : r;
        } else if (r.g < v[1].g) {
            v[2] = r;
        } else {
            Vertex contracted =
                r.g < v[2].g ? eval(along(0.5))
                             : eval({0.5 * (c.wavelength_um + w.wavelength_um),
                                     0.5 * (c.duty_cycle_pct + w.duty_cycle_pct)});
            if (contracted.g < v[2].g) {
                v[2] = contracted;
            } else { // shrink toward the best vertex
                for (int i = 1; i < 3; ++i)
                    v[i] = eval({0.5 * (v[0].p.wavelength_um +
                                        v[i].p.wavelength_um),
                                 0.5 * (v[0].p.duty_cycle_pct +
                                        v[i].p.duty_cycle_pct)});
            }
        }
        order();
    }
    return {v[0].p, -v[0].g};
}

} // namespace

MaximizeResult
maximize_on_box(const std::function<double(const ControllerParams&)>& f,
                const SearchBox& box, int nx, int ny, int top_k,
                int refine_max_evals) {
    box.validate();
    if (nx < 2 || ny < 2) throw DomainError("lattice needs >= 2 points per axis");
    const double dx = (box.wavelength_max_um - box.wavelength_min_um) /
                      (nx - 1);
    const double dy = (box.duty_max_pct - box.duty_min_pct) / (ny - 1);

    struct Cell {
        double val;
        int ix, iy;
    };
    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(nx) * ny);
    MaximizeResult best;
    bool first = true;
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) {
            ControllerParams p{box.wavelength_min_um + ix * dx,
                               box.duty_min_pct + iy * dy};
            double val = f(p);
            cells.push_back({val, ix, iy});
            if (first || val > best.value) { // strict: ties keep the
                best = {p, val};             // lexicographically lowest point
                first = false;
            }
        }
    }

    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        return std::tie(b.val, a.ix, a.iy) < std::tie(a.val, b.ix, b.iy);
    });
    const int k = std::min<int>(top_k, static_cast<int>(cells.size()));
    for (int i = 0; i < k; ++i) {
        const Cell& c = cells[static_cast<std::size_t>(i)];
        ControllerParams start{box.wavelength_min_um + c.ix * dx,
                               box.duty_min_pct + c.iy * dy};
        double sx = c.ix == nx - 1 ? -dx : dx;
        double sy = c.iy == ny - 1 ? -dy : dy;
        MaximizeResult r =
            nelder_mead_refine(f, box, start, sx, sy, refine_max_evals);
        if (r.value > best.value) best = r;
    }
    return best;
}

Incumbent find_incumbent(const Posterior& post) {
    MaximizeResult r = maximize_on_box(
        [&](const ControllerParams& p) { return -post.stats(p).mean; },
        post.box());
    return {r.params, -r.value};
}

// --- entropy search -------------------------------------------------------

namespace {

constexpr int kGhNodes = 9;
// Gauss-Hermite abscissas/weights for weight exp(-x^2); weights sum to
// sqrt(pi).
constexpr double kGhX[kGhNodes] = {
    -3.1909932017815277, -2.2665805845318432, -1.4685532892166679,
    -0.72355101875283756, 0.0,                0.72355101875283756,
    1.4685532892166679,  2.2665805845318432,  3.1909932017815277};
constexpr double kGhW[kGhNodes] = {
    3.9606977263264365e-05, 0.0049436242755369411, 0.08847452739437664,
    0.43265155900255564,    0.72023521560605097,   0.43265155900255564,
    0.08847452739437664,    0.0049436242755369411, 3.9606977263264365e-05};
constexpr double kInvSqrtPi = 0.5641895835477562869;

double entropy_from_counts(const std::vector<int>& counts, int total) {
    double h = 0.0;
    for (int c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

} // namespace

EsScorer::EsScorer(const Posterior& post, const AcquisitionConfig& cfg,
                   std::uint64_t seed)
    : post_(post), cfg_(cfg) {
    cfg_.validate();
    if (cfg_.kind != AcquisitionKind::EntropySearch)
        throw DomainError("EsScorer requires an entropy-search config");

    // Near-square representer lattice, endpoints included, at most
    // es_representer_count points.
    int nrx = static_cast<int>(std::ceil(std::sqrt(
        static_cast<double>(cfg_.es_representer_count))));
    int nry = cfg_.es_representer_count / nrx;
    nrx = std::max(nrx, 2);
    nry = std::max(nry, 2);
    reps_.reserve(static_cast<std::size_t>(nrx) * nry);
    for (int i = 0; i < nrx; ++i)
        for (int j = 0; j < nry; ++j)
            reps_.push_back({static_cast<double>(i) / (nrx - 1),
                             static_cast<double>(j) / (nry - 1)});

    const Eigen::Index R = static_cast<Eigen::Index>(reps_.size());
    const Eigen::Index S = cfg_.es_mc_samples;

    Eigen::VectorXd mu;
    Eigen::MatrixXd cov;
    post_.joint_nd(reps_, mu, cov);

    const double base_var = cov.diagonal().mean();
    if (!(base_var > 0.0)) {
        degenerate_ = true;
        return;
    }
    double jitter = 1e-12 * base_var;
    for (;;) {
        Eigen::MatrixXd cj = cov;
        cj.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(cj);
        if (llt.info() == Eigen::Success) {
            L_ = llt.matrixL();
            break;
        }
        jitter *= 10.0;
        if (jitter > 1e-2 * base_var) {
            degenerate_ = true;
            return;
        }
    }

    RandomStream rng(seed);
    z_.resize(R, S);
    for (Eigen::Index s = 0; s < S; ++s)
        for (Eigen::Index r = 0; r < R; ++r) z_(r, s) = rng.normal();
    z_extra_.resize(S);
    for (Eigen::Index s = 0; s < S; ++s) z_extra_[s] = rng.normal();
    eps_.resize(S);
    const double noise = post_.hyperparams().noise_std;
    for (Eigen::Index s = 0; s < S; ++s) eps_[s] = noise * rng.normal();

    samples_ = (L_ * z_).colwise() + mu;

    std::vector<int> counts(static_cast<std::size_t>(R), 0);
    for (Eigen::Index s = 0; s < S; ++s) {
        Eigen::Index arg = 0;
        samples_.col(s).minCoeff(&arg);
        ++counts[static_cast<std::size_t>(arg)];
    }
    base_entropy_ = entropy_from_counts(counts, static_cast<int>(S));

    cross_solve_ = post_.cross_solve_nd(reps_);
}

double EsScorer::score(const ControllerParams& candidate) const {
    if (degenerate_) return 0.0;
    const Eigen::Index R = samples_.rows();
    const Eigen::Index S = samples_.cols();

    double mu_c = 0.0, var_c = 0.0;
    Eigen::VectorXd cross;
    post_.point_vs_set_nd(post_.box().normalized(candidate), reps_,
                          cross_solve_, mu_c, var_c, cross);

    const double sig = post_.hyperparams().total_signal_std();
    if (var_c < 1e-14 * sig * sig) return 0.0; // nothing left to learn here
    const double noise = post_.hyperparams().noise_std;
    const double v_obs = var_c + noise * noise;

    // Candidate's latent draws, jointly consistent with the base samples:
    // new Cholesky row (w, d) against the representer factor.
    Eigen::VectorXd w =
        L_.triangularView<Eigen::Lower>().solve(cross);
    double d = std::sqrt(std::fmax(var_c - w.squaredNorm(), 0.0));
    Eigen::VectorXd fc =
        (z_.transpose() * w) + d * z_extra_ +
        Eigen::VectorXd::Constant(S, mu_c);

    std::vector<int> counts(static_cast<std::size_t>(R));
    const double* smp = samples_.data(); // column-major, R rows
    const double* cr = cross.data();
    double expected_h = 0.0;
    for (int k = 0; k < kGhNodes; ++k) {
        const double y = mu_c + std::sqrt(2.0 * v_obs) * kGhX[k];
        std::fill(counts.begin(), counts.end(), 0);
        for (Eigen::Index s = 0; s < S; ++s) {
            // Exact conditional draw given a hypothetical observation y:
            // shift every sample along the cross-covariance direction.
            const double lam = (y - fc[s] - eps_[s]) / v_obs;
            const double* col = smp + s * R;
            Eigen::Index arg = 0;
            double best = col[0] + cr[0] * lam;
            for (Eigen::Index r = 1; r < R; ++r) {
                double val = col[r] + cr[r] * lam;
                if (val < best) {
                    best = val;
                    arg = r;
                }
            }
            ++counts[static_cast<std::size_t>(arg)];
        }
        expected_h += kGhW[k] * kInvSqrtPi *
                      entropy_from_counts(counts, static_cast<int>(S));
    }
    return base_entropy_ - expected_h;
}

double es_score(const Posterior& post, const ControllerParams& candidate,
                const AcquisitionConfig& cfg, std::uint64_t seed) {
    return EsScorer(post, cfg, seed).score(candidate);
}

ControllerParams maximize_acq(const Posterior& post,
                              const AcquisitionConfig& cfg,
                              std::uint64_t es_seed,
                              const Incumbent* incumbent) {
    cfg.validate();
    if (cfg.kind == AcquisitionKind::EntropySearch) {
        EsScorer scorer(post, cfg, es_seed);
        return maximize_on_box(
                   [&](const ControllerParams& p) { return scorer.score(p); },
                   post.box())
            .params;
    }
    Incumbent inc = incumbent ? *incumbent : find_incumbent(post);
    return maximize_on_box(
               [&](const ControllerParams& p) {
                   return acq_value(cfg, post.stats(p), inc);
               },
               post.box())
        .params;
}

} // namespace gaitopt

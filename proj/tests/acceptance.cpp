// End-to-end acceptance gate. Each criterion prints exactly one PASS/FAIL
// line; the exit status is the number of failed (hard) criteria.
//
// Usage: acceptance <path-to-gaitopt-cli> <scratch-dir>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

#include "gaitopt/acquisition.hpp"
#include "gaitopt/benchgen.hpp"
#include "gaitopt/benchmark.hpp"
#include "gaitopt/gp.hpp"
#include "gaitopt/plant.hpp"
#include "gaitopt/rng.hpp"
#include "gaitopt/velocity.hpp"
#include "oracles.hpp"

using namespace gaitopt;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 =
        std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    }
};

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s - %s\n", criterion, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void report_soft(int criterion, bool holds, const std::string& detail) {
    std::printf("criterion %d: %s - %s\n", criterion,
                holds ? "PASS (soft)" : "DEVIATION (soft, not counted)",
                detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CmdResult {
    int status = -1;
    std::string out;
};

CmdResult run_capture(const std::string& cmd) {
    CmdResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0)
        res.out.append(buf, n);
    const int rc = pclose(pipe);
    res.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return res;
}

std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

double rel_err(double got, double want) {
    return std::fabs(got - want) / std::fmax(std::fabs(want), 1e-300);
}

// ---------------------------------------------------------------------
// 1. GP posterior and marginal likelihood vs. independent dense oracle.

void criterion_1() {
    Timer timer;
    const KernelKind kinds[] = {
        KernelKind::SquaredExponential, KernelKind::RationalQuadratic,
        KernelKind::Matern32, KernelKind::Matern52, KernelKind::TwoMatern};
    SearchBox box;
    RandomStream rs(20260817);
    double worst = 0.0;
    int datasets = 0, checks = 0;
    for (int rep = 0; rep < 20; ++rep) {
        for (KernelKind kind : kinds) {
            Hyperparams hp = default_hyperparams(kind, 1.0 + rs.uniform01(),
                                                 0.05 + 0.2 * rs.uniform01(),
                                                 2.0);
            for (auto& c : hp.components) {
                c.length_scales[0] *= 0.6 + 0.8 * rs.uniform01();
                c.length_scales[1] *= 0.6 + 0.8 * rs.uniform01();
            }
            hp.rq_alpha = 0.8 + 2.0 * rs.uniform01();

            const int n = 1 + static_cast<int>(rs.uniform01() * 10.0);
            Dataset data;
            for (int i = 0; i < n; ++i)
                data.add(box.denormalized({rs.uniform01(), rs.uniform01()}),
                         2.0 + rs.normal());
            ++datasets;

            const Posterior post(hp, box, data);
            for (int q = 0; q < 4; ++q) {
                const ControllerParams query =
                    box.denormalized({rs.uniform01(), rs.uniform01()});
                const PosteriorStats got = post.stats(query);
                const oracle::GpOracle want =
                    oracle::posterior(hp, box, data, query);
                worst = std::fmax(worst, rel_err(got.mean, want.mean));
                worst = std::fmax(worst, rel_err(got.variance, want.variance));
                checks += 2;
            }
            const oracle::GpOracle lml =
                oracle::posterior(hp, box, data, data.points[0].params);
            worst = std::fmax(
                worst, rel_err(post.log_marginal_likelihood(), lml.lml));
            ++checks;
        }
    }
    const double secs = timer.seconds();
    const bool pass = worst <= 1e-10 && secs < 10.0;
    report(1, pass,
           fmt("GP vs dense oracle: %d datasets (all 5 kernels, N <= 10), "
               "%d checks, worst relative error %.3g (limit 1e-10), %.2f s "
               "(limit 10 s)",
               datasets, checks, worst, secs));
}

// ---------------------------------------------------------------------
// 2. EI/PI closed forms vs. Monte Carlo; exact zero-variance limits.

void criterion_2() {
    Timer timer;
    const int mc = 100000;
    int triples = 0, violations = 0;
    double worst_z = 0.0;
    RandomStream param_rs(512);
    for (int trial = 0; trial < 50; ++trial) {
        const double mean = 0.5 + 3.0 * param_rs.uniform01();
        const double sigma = 0.05 + 0.95 * param_rs.uniform01();
        const double threshold =
            mean + sigma * (4.0 * param_rs.uniform01() - 2.0);
        ++triples;

        RandomStream rs(900 + trial);
        double hits = 0.0, imp_sum = 0.0, imp_sq = 0.0;
        for (int i = 0; i < mc; ++i) {
            const double x = mean + sigma * rs.normal();
            if (x < threshold) hits += 1.0;
            const double imp = std::fmax(threshold - x, 0.0);
            imp_sum += imp;
            imp_sq += imp * imp;
        }
        const double p_hat = hits / mc;
        const double se_p =
            std::sqrt(std::fmax(p_hat * (1.0 - p_hat), 1e-12) / mc);
        const double pi =
            probability_of_improvement(mean, sigma * sigma, threshold);
        const double z_pi = std::fabs(pi - p_hat) / se_p;

        const double ei_hat = imp_sum / mc;
        const double se_e = std::sqrt(
            std::fmax(imp_sq / mc - ei_hat * ei_hat, 1e-12) / mc);
        const double ei = expected_improvement(mean, sigma * sigma, threshold);
        const double z_ei = std::fabs(ei - ei_hat) / se_e;

        worst_z = std::fmax(worst_z, std::fmax(z_pi, z_ei));
        if (z_pi > 3.0 || z_ei > 3.0) ++violations;
    }

    const bool limits_exact =
        probability_of_improvement(1.0, 0.0, 2.0) == 1.0 &&
        probability_of_improvement(3.0, 0.0, 2.0) == 0.0 &&
        expected_improvement(1.25, 0.0, 2.0) == 0.75 &&
        expected_improvement(2.5, 0.0, 2.0) == 0.0;

    const double secs = timer.seconds();
    const bool pass = violations == 0 && limits_exact && secs < 30.0;
    report(2, pass,
           fmt("EI/PI vs 1e5-sample Monte Carlo: %d triples, %d beyond 3 "
               "standard errors (worst %.2f SE), zero-variance limits %s, "
               "%.2f s (limit 30 s)",
               triples, violations, worst_z,
               limits_exact ? "exact" : "WRONG", secs));
}

// ---------------------------------------------------------------------
// 3. Velocity estimator: exact recovery, then noisy recovery rate.

void criterion_3() {
    Timer timer;
    constexpr double kTau = 6.283185307179586476925286766559;

    double worst_rel = 0.0;
    RandomStream rs(777);
    for (int rep = 0; rep < 20; ++rep) {
        const double v = 0.5 + 4.5 * rs.uniform01(); // %BL/s
        const double slope = v * 3.0;                // bodylength 300 um
        // keep |b| bounded away from 0 so relative error stays meaningful
        const double b = (rep % 2 ? 1.0 : -1.0) * (1.0 + 4.0 * rs.uniform01());
        const double a = 0.2 + 1.3 * rs.uniform01();
        const double phi = 0.3 + 2.5 * rs.uniform01();

        TrackingTrace tr;
        tr.bodylength_um = 300.0;
        tr.frame_rate_hz = 10.0;
        for (int k = 0; k <= 300; ++k) {
            const double t = k / 10.0;
            tr.samples.push_back(
                {t, slope * t + b + a * std::sin(kTau * t + phi)});
        }
        const FitResult fit = fit_movement(tr, 1.0, 2.0);
        worst_rel = std::fmax(worst_rel, rel_err(fit.v_m, v));
        worst_rel = std::fmax(worst_rel, rel_err(fit.offset_b_um, b));
        worst_rel = std::fmax(worst_rel, rel_err(fit.amplitude_a_um, a));
        worst_rel = std::fmax(worst_rel, rel_err(fit.phase_phi_rad, phi));
    }

    const PlantSpec plant = default_plant();
    const ControllerParams theta{645.0, 30.0};
    const double truth = plant.speed_map(theta);
    int within = 0;
    const int trials = 200;
    for (int s = 0; s < trials; ++s) {
        const TrackingTrace tr =
            simulate_trace(plant, theta, 22.0, 40000 + s);
        const FitResult fit = fit_movement(tr, plant.oscillation_hz, 2.0);
        if (std::fabs(fit.v_m - truth) <= 0.05 * truth) ++within;
    }

    const double secs = timer.seconds();
    const bool pass = worst_rel <= 1e-6 && within >= 190 && secs < 20.0;
    report(3, pass,
           fmt("movement fit: noiseless worst relative error %.3g (limit "
               "1e-6); with 2 um noise %d/%d trials within 5%% (need 190); "
               "%.2f s (limit 20 s)",
               worst_rel, within, trials, secs));
}

// ---------------------------------------------------------------------
// 4. Semi-synthetic pipeline: node reproduction and optimum containment.

void criterion_4() {
    Timer timer;
    const PlantSpec plant = default_plant();
    GridData grid = default_plant_grid(plant, 4.0, 56, 1);
    grid = smooth3x3(fill_missing(grid));

    GridData quiet = grid;
    quiet.noise_std = 0.0;
    const CostSurface clean = CostSurface::build(quiet, 99);
    double worst_node = 0.0;
    for (std::size_t i = 0; i < quiet.nx(); ++i)
        for (std::size_t j = 0; j < quiet.ny(); ++j) {
            const ControllerParams theta{
                quiet.wavelength_px[i] * kPixelPitchUm, quiet.duty_pct[j]};
            worst_node = std::fmax(
                worst_node, std::fabs(clean.value(theta) - quiet.at(i, j)));
        }

    // Rank the smoothed cells; find each noisy surface optimum's cell.
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t k = 0; k < grid.cost.size(); ++k)
        ranked.push_back({grid.cost[k], k});
    std::sort(ranked.begin(), ranked.end());

    auto nearest_cell = [&](const ControllerParams& theta) {
        std::size_t bi = 0, bj = 0;
        double bx = 1e300, by = 1e300;
        for (std::size_t i = 0; i < grid.nx(); ++i) {
            const double d = std::fabs(grid.wavelength_px[i] * kPixelPitchUm -
                                       theta.wavelength_um);
            if (d < bx) bx = d, bi = i;
        }
        for (std::size_t j = 0; j < grid.ny(); ++j) {
            const double d = std::fabs(grid.duty_pct[j] - theta.duty_cycle_pct);
            if (d < by) by = d, bj = j;
        }
        return bi * grid.ny() + bj;
    };

    int hits = 0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        const CostSurface surf = CostSurface::build(grid, 5000 + s);
        const std::size_t cell = nearest_cell(surf.theta_opt());
        for (int r = 0; r < 3; ++r)
            if (ranked[static_cast<std::size_t>(r)].second == cell) {
                ++hits;
                break;
            }
    }

    const double secs = timer.seconds();
    const bool pass = worst_node <= 1e-9 && hits >= seeds * 80 / 100 &&
                      secs < 60.0;
    report(4, pass,
           fmt("surface pipeline: worst node deviation at zero noise %.3g "
               "(limit 1e-9); optimum cell in top-3 smoothed cells %d/%d "
               "(need 160); %.2f s (limit 60 s)",
               worst_node, hits, seeds, secs));
}

// ---------------------------------------------------------------------
// 5 + 6 + first half of 8: benchmark headline on the default grid.

BenchmarkSuite acceptance_suite() {
    BenchmarkSuite suite;
    suite.configs = {suite_config_from_name("2mat-ei-sf1-learned"),
                     suite_config_from_name("random"),
                     suite_config_from_name("se-ei-sf1-fixed"),
                     suite_config_from_name("m32-ei-sf1-fixed"),
                     suite_config_from_name("m52-ei-sf1-fixed"),
                     suite_config_from_name("2mat-ei-sf1-fixed")};
    suite.runs = 200;
    suite.budget = 20;
    suite.master_seed = 1;
    return suite;
}

std::map<std::string, double> criterion_5_and_6(const fs::path& scratch) {
    Timer timer;
    const BenchmarkSuite suite = acceptance_suite();
    const fs::path out = scratch / "bench1";
    fs::remove_all(out);
    const BenchmarkReport rep = run_benchmark(suite, out.string());
    write_report_files(rep, suite, out.string());

    std::map<std::string, double> medians;
    for (const auto& st : rep.configs) medians[st.name] = st.median_regret;

    const double secs = timer.seconds();
    const double headline = medians.at("2mat-ei-sf1-learned");
    const double random = medians.at("random");
    const bool pass = headline <= 0.15 && headline < random && secs < 600.0;
    report(5, pass,
           fmt("headline 2mat-ei-sf1-learned over 200 runs x 20 iterations: "
               "median regret %.2f%% (limit 15%%), random baseline %.2f%% "
               "(must be higher), %.1f s (limit 600 s)",
               100.0 * headline, 100.0 * random, secs));

    const double se = medians.at("se-ei-sf1-fixed");
    const std::array<std::pair<const char*, double>, 3> materns{
        {{"m32", medians.at("m32-ei-sf1-fixed")},
         {"m52", medians.at("m52-ei-sf1-fixed")},
         {"2mat", medians.at("2mat-ei-sf1-fixed")}}};
    std::string exceptions;
    for (const auto& [name, med] : materns)
        if (se < med) exceptions += fmt(" %s", name);
    std::string detail =
        fmt("SE vs Matern medians under ei-sf1-fixed: se %.2f%%, m32 %.2f%%, "
            "m52 %.2f%%, 2mat %.2f%% (expected se >= each)",
            100.0 * se, 100.0 * materns[0].second, 100.0 * materns[1].second,
            100.0 * materns[2].second);
    if (!exceptions.empty())
        detail += "; exception(s):" + exceptions;
    report_soft(6, exceptions.empty(), detail);
    return medians;
}

// ---------------------------------------------------------------------
// 7 + second half of 8: closed loop through the command-line interface.

struct LoopResult {
    bool ok = false;
    std::string error;
    ControllerParams incumbent{};
};

LoopResult run_cli_loop(const std::string& cli, const fs::path& dir) {
    LoopResult res;
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "config.kv";
    {
        std::ofstream cfg(cfg_path);
        cfg << "seed = 1\nbudget = 20\n";
    }
    const fs::path state = dir / "state.json";
    const PlantSpec plant = default_plant();

    for (int iter = 1; iter <= 20; ++iter) {
        std::string ask_cmd = shell_quote(cli) + " ask --state " +
                              shell_quote(state.string());
        if (iter == 1)
            ask_cmd += " --config " + shell_quote(cfg_path.string());
        const CmdResult ask = run_capture(ask_cmd);
        if (ask.status != 0) {
            res.error = fmt("ask failed at iteration %d (exit %d)", iter,
                            ask.status);
            return res;
        }
        std::string theta_text = ask.out;
        while (!theta_text.empty() &&
               (theta_text.back() == '\n' || theta_text.back() == '\r'))
            theta_text.pop_back();
        ControllerParams theta{};
        if (std::sscanf(theta_text.c_str(), "%lf,%lf", &theta.wavelength_um,
                        &theta.duty_cycle_pct) != 2) {
            res.error = "could not parse proposal: " + theta_text;
            return res;
        }

        const TrackingTrace trace = simulate_trace(
            plant, theta, 22.0,
            derive_seed(9, streams::kPlantTrace,
                        static_cast<std::uint64_t>(iter)));
        const FitResult fit = fit_movement(trace, plant.oscillation_hz, 2.0);
        const double cost = cost_from_speed(fit.v_m, 4.0);

        char cost_text[64];
        std::snprintf(cost_text, sizeof cost_text, "%.17g", cost);
        const std::string tell_cmd =
            shell_quote(cli) + " tell --state " + shell_quote(state.string()) +
            " --theta " + shell_quote(theta_text) + " --cost " + cost_text +
            " > /dev/null";
        const int rc = std::system(tell_cmd.c_str());
        if (!WIFEXITED(rc) || WEXITSTATUS(rc) != 0) {
            res.error = fmt("tell failed at iteration %d", iter);
            return res;
        }
    }

    const json st = json::parse(slurp(state));
    const auto& last = st.at("runlog").back();
    res.incumbent = {last.at("incumbent").at("wavelength_um").get<double>(),
                     last.at("incumbent").at("duty_pct").get<double>()};
    res.ok = true;
    return res;
}

void criterion_7(const std::string& cli, const fs::path& scratch) {
    Timer timer;
    const LoopResult loop = run_cli_loop(cli, scratch / "loop1");
    if (!loop.ok) {
        report(7, false, "closed loop did not finish: " + loop.error);
        return;
    }
    const PlantSpec plant = default_plant();
    const double inc_speed = plant.speed_map(loop.incumbent);
    const double initial_speed = plant.speed_map(initial_controller());
    const double opt_speed = plant_optimum(plant).speed;

    const double secs = timer.seconds();
    const bool pass = inc_speed >= 0.85 * opt_speed &&
                      inc_speed > initial_speed && secs < 120.0;
    report(7, pass,
           fmt("ask/tell CLI vs plant (budget 20, seed fixed): incumbent "
               "(%.1f um, %.1f%%) runs at %.3f %%BL/s = %.0f%% of the plant "
               "optimum %.3f (need 85%%), up from %.3f at the start; %.1f s "
               "(limit 120 s)",
               loop.incumbent.wavelength_um, loop.incumbent.duty_cycle_pct,
               inc_speed, 100.0 * inc_speed / opt_speed, opt_speed,
               initial_speed, secs));
}

void criterion_8(const std::string& cli, const fs::path& scratch) {
    Timer timer;
    // Repeat criterion 5's benchmark and criterion 7's loop with the same
    // seeds; every artifact must be byte-identical.
    const BenchmarkSuite suite = acceptance_suite();
    const fs::path out2 = scratch / "bench2";
    fs::remove_all(out2);
    const BenchmarkReport rep = run_benchmark(suite, out2.string());
    write_report_files(rep, suite, out2.string());

    std::vector<std::string> mismatched;
    std::size_t compared = 0;
    const fs::path out1 = scratch / "bench1";
    for (const auto& entry : fs::directory_iterator(out1)) {
        const std::string name = entry.path().filename().string();
        ++compared;
        if (slurp(entry.path()) != slurp(out2 / name))
            mismatched.push_back(name);
    }
    std::size_t count2 = 0;
    for (const auto& entry : fs::directory_iterator(out2)) {
        (void)entry;
        ++count2;
    }

    const LoopResult loop = run_cli_loop(cli, scratch / "loop2");
    const bool state_equal =
        loop.ok && slurp(scratch / "loop1" / "state.json") ==
                       slurp(scratch / "loop2" / "state.json");

    const double secs = timer.seconds();
    const bool pass = mismatched.empty() && compared == count2 &&
                      compared > 0 && state_equal;
    std::string detail = fmt(
        "determinism: %zu benchmark artifacts byte-identical across reruns",
        compared);
    if (!mismatched.empty())
        detail += fmt(" EXCEPT %zu (first: %s)", mismatched.size(),
                      mismatched.front().c_str());
    if (compared != count2) detail += " (file counts differ)";
    detail += state_equal ? "; CLI state files byte-identical"
                          : "; CLI STATE FILES DIFFER";
    detail += fmt("; %.1f s", secs);
    report(8, pass, detail);
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::fprintf(stderr, "usage: acceptance <gaitopt-cli> <scratch-dir>\n");
        return 64;
    }
    const std::string cli = argv[1];
    const fs::path scratch = argv[2];
    fs::create_directories(scratch);

    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5_and_6(scratch);
    criterion_7(cli, scratch);
    criterion_8(cli, scratch);

    if (g_failures == 0)
        std::printf("all hard criteria passed\n");
    else
        std::printf("%d hard criterion(s) failed\n", g_failures);
    return g_failures;
}

#include "gaitopt/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gaitopt/errors.hpp"
#include "gaitopt/plant.hpp"
#include "gaitopt/rng.hpp"

namespace gaitopt {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(v));
    return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << content;
        if (!out) throw DataError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

json params_json(const ControllerParams& p) {
    json j;
    j["wavelength_um"] = p.wavelength_um;
    j["duty_pct"] = p.duty_cycle_pct;
    return j;
}

json kv_json(const KeyValueDoc& doc) {
    json out = json::object();
    for (const auto& [key, value] : doc.items()) {
        char* end = nullptr;
        double d = std::strtod(value.c_str(), &end);
        if (end != value.c_str() && *end == '\0')
            out[key] = d;
        else
            out[key] = value;
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

SuiteConfig suite_config_from_name(const std::string& name) {
    SuiteConfig sc;
    sc.name = name;
    if (name == "random") {
        sc.random_baseline = true;
        return sc;
    }
    auto parts = split(name, '-');
    if (parts.size() != 4)
        throw DomainError("unknown benchmark configuration: " + name);
    sc.bo.kernel = kernel_from_name(parts[0]);
    sc.bo.acq.kind = acquisition_from_name(parts[1]);
    sc.bo.signal = signal_from_name(parts[2]);
    sc.bo.hyper = hyper_from_name(parts[3]);
    if (sc.bo.acq.kind == AcquisitionKind::EntropySearch &&
        sc.bo.hyper == HyperMode::Learned)
        throw DomainError(
            "entropy search with learned hyperparameters is unsupported");
    return sc;
}

std::vector<std::string> table_config_names() {
    static const char* kKernels[] = {"se", "rq", "m32", "m52", "2mat"};
    static const char* kColumns[] = {"ei-sf1-fixed",  "ei-sf1-learned",
                                     "ei-sf2-fixed",  "ei-sf2-learned",
                                     "pi-sf1-fixed",  "pi-sf1-learned",
                                     "es-sf1-fixed"};
    std::vector<std::string> names;
    for (const char* k : kKernels)
        for (const char* c : kColumns) {
            if (std::string(k) == "2mat" && std::string(c) == "es-sf1-fixed")
                continue;
            names.push_back(std::string(k) + "-" + c);
        }
    return names;
}

void BenchmarkSuite::validate() const {
    if (runs < 1) throw DomainError("suite needs at least one run");
    if (budget < 1) throw DomainError("suite needs a positive budget");
    if (threads < 0) throw DomainError("thread count cannot be negative");
    if (!(surface_floor > 0.0))
        throw DomainError("surface floor must be positive");
    if (!(v_star > 0.0)) throw DomainError("v_star must be positive");
    if (configs.empty()) throw DomainError("suite has no configurations");
    std::set<std::string> seen;
    for (const auto& sc : configs) {
        if (sc.name.empty()) throw DomainError("configuration without a name");
        if (!seen.insert(sc.name).second)
            throw DomainError("duplicate configuration name: " + sc.name);
        if (!sc.random_baseline && !sc.proposal_stub &&
            sc.bo.acq.kind == AcquisitionKind::EntropySearch &&
            sc.bo.hyper == HyperMode::Learned)
            throw DomainError("entropy search with learned hyperparameters is "
                              "unsupported: " +
                              sc.name);
    }
    if (!grid.cost.empty()) grid.validate();
}

BenchmarkSuite default_suite(std::uint64_t master_seed) {
    BenchmarkSuite s;
    s.master_seed = master_seed;
    for (const auto& name : table_config_names())
        s.configs.push_back(suite_config_from_name(name));
    s.configs.push_back(suite_config_from_name("random"));
    return s;
}

BenchmarkSuite headline_suite(std::uint64_t master_seed) {
    BenchmarkSuite s;
    s.master_seed = master_seed;
    s.configs.push_back(suite_config_from_name("2mat-ei-sf1-learned"));
    s.configs.push_back(suite_config_from_name("random"));
    return s;
}

BenchmarkSuite suite_from_kv(const KeyValueDoc& doc) {
    static const std::set<std::string> kKnown = {
        "suite",  "configs",  "runs",      "budget", "seed",     "threads",
        "v_star", "observed", "noise_std", "floor",  "timing",   "grid_csv"};
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!kKnown.count(key))
            throw DataError("unknown benchmark config key: " + key);
    }

    BenchmarkSuite s;
    s.master_seed = doc.get_u64_or("seed", 1);
    s.runs = doc.get_int_or("runs", 200);
    s.budget = doc.get_int_or("budget", 20);
    s.threads = doc.get_int_or("threads", 0);
    s.v_star = doc.get_double_or("v_star", 4.0);
    s.observed_cells = static_cast<std::size_t>(
        doc.get_int_or("observed", 56));
    s.surface_floor = doc.get_double_or("floor", 1e-3);
    s.timing = doc.get_bool_or("timing", false);

    std::vector<std::string> names;
    if (doc.has("configs")) {
        for (auto& n : split(doc.get("configs"), ',')) {
            std::string t = trim(n);
            if (!t.empty()) names.push_back(t);
        }
    } else {
        const std::string suite_name = doc.get_or("suite", "table");
        if (suite_name == "table") {
            names = table_config_names();
            names.push_back("random");
        } else if (suite_name == "headline") {
            names = {"2mat-ei-sf1-learned", "random"};
        } else {
            throw DataError("unknown suite: " + suite_name);
        }
    }
    for (const auto& n : names)
        s.configs.push_back(suite_config_from_name(n));

    if (doc.has("grid_csv")) s.grid = load_grid_csv(doc.get("grid_csv"));
    if (doc.has("noise_std")) {
        const double noise = doc.get_double("noise_std");
        // An empty grid keeps the override too; run_benchmark carries it
        // onto the synthesized grid.
        s.grid.noise_std = noise;
        for (auto& sc : s.configs) sc.bo.noise_std = noise;
    }
    s.validate();
    return s;
}

namespace {

/// Per-(config, run) execution. Returns per-iteration regrets and fills the
/// runlog record lines.
void execute_pair(const SuiteConfig& sc, const BenchmarkSuite& suite,
                  const CostSurface& surface, int run,
                  std::uint64_t config_seed, std::vector<double>& regrets,
                  std::vector<std::string>& record_lines) {
    RandomStream noise(
        derive_seed(config_seed, streams::kObservationNoise,
                    static_cast<std::uint64_t>(run)));
    regrets.clear();
    record_lines.clear();

    auto push_record = [&](int iteration, const ControllerParams& proposed,
                           double observed, const ControllerParams& incumbent,
                           double incumbent_mean, double regret,
                           double wall_time_s, const Hyperparams* hp) {
        json rec;
        rec["iteration"] = iteration;
        rec["proposed"] = params_json(proposed);
        rec["observed_cost"] = observed;
        rec["incumbent"] = params_json(incumbent);
        rec["incumbent_mean"] = incumbent_mean;
        rec["regret"] = regret;
        rec["wall_time_s"] = wall_time_s;
        if (hp) rec["hyperparams"] = kv_json(hyperparams_to_kv(*hp));
        record_lines.push_back(rec.dump());
    };

    if (sc.random_baseline || sc.proposal_stub) {
        RandomStream prop(
            derive_seed(config_seed, streams::kRandomSearch,
                        static_cast<std::uint64_t>(run)));
        double best_cost = std::numeric_limits<double>::infinity();
        ControllerParams best{};
        for (int iter = 1; iter <= suite.budget; ++iter) {
            ControllerParams theta;
            if (sc.proposal_stub) {
                theta = sc.proposal_stub(iter, surface);
            } else {
                const double u0 = prop.uniform01();
                const double u1 = prop.uniform01();
                theta = surface.box().denormalized({u0, u1});
            }
            const double obs =
                surface.value(theta) + sc.bo.noise_std * noise.normal();
            if (obs < best_cost) {
                best_cost = obs;
                best = theta;
            }
            const double regret = normalized_regret(surface, best);
            regrets.push_back(regret);
            push_record(iter, theta, obs, best, best_cost, regret, 0.0,
                        nullptr);
        }
        return;
    }

    BoConfig cfg = sc.bo;
    cfg.budget = suite.budget;
    cfg.box = surface.box();
    cfg.timing = suite.timing;
    cfg.seed = derive_seed(config_seed, streams::kBoRun,
                           static_cast<std::uint64_t>(run));
    cfg.validate();
    BoState state(cfg);
    for (int iter = 1; iter <= suite.budget; ++iter) {
        const ControllerParams theta = state.ask();
        const double obs =
            surface.value(theta) + cfg.noise_std * noise.normal();
        state.tell(theta, obs);
        const RunRecord& rec = state.runlog().back();
        const double regret = normalized_regret(surface, rec.incumbent);
        regrets.push_back(regret);
        push_record(rec.iteration, rec.proposed, rec.observed_cost,
                    rec.incumbent, rec.incumbent_mean, regret, rec.wall_time_s,
                    &rec.hyperparams);
    }
}

bool try_resume(const fs::path& log_path, const std::string& config_name,
                int run, const CostSurface& surface, int budget,
                std::vector<double>& regrets) {
    std::ifstream in(log_path);
    if (!in) return false;
    std::string line;
    if (!std::getline(in, line)) return false;
    json meta;
    try {
        meta = json::parse(line);
        const auto& m = meta.at("meta");
        if (m.at("config").get<std::string>() != config_name) return false;
        if (m.at("run").get<int>() != run) return false;
        if (m.at("surface_seed").get<std::uint64_t>() != surface.seed())
            return false;
        if (m.at("surface_hash").get<std::string>() !=
            hex64(surface.surface_hash()))
            return false;
        if (m.at("budget").get<int>() != budget) return false;
    } catch (...) {
        return false;
    }
    std::vector<double> r;
    int expect = 1;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            json rec = json::parse(line);
            if (rec.at("iteration").get<int>() != expect) return false;
            r.push_back(rec.at("regret").get<double>());
        } catch (...) {
            return false;
        }
        ++expect;
    }
    if (static_cast<int>(r.size()) != budget) return false;
    regrets = std::move(r);
    return true;
}

} // namespace

BenchmarkReport run_benchmark(const BenchmarkSuite& suite_in,
                              const std::string& out_dir) {
    BenchmarkSuite suite = suite_in;
    suite.validate();
    if (suite.grid.cost.empty()) {
        const double noise = suite.grid.noise_std; // honor a noise-only override
        suite.grid = default_plant_grid(default_plant(), suite.v_star,
                                        suite.observed_cells,
                                        suite.master_seed);
        suite.grid.noise_std = noise;
    }
    const GridData smoothed = smooth3x3(fill_missing(suite.grid));

    if (!out_dir.empty()) fs::create_directories(out_dir);

    BenchmarkReport report;
    report.runs = suite.runs;
    report.budget = suite.budget;
    report.master_seed = suite.master_seed;

    const std::size_t n_configs = suite.configs.size();
    if (n_configs == 0) return report;

    // One surface per run, shared by every configuration (paired design).
    std::vector<CostSurface> surfaces;
    std::vector<int> attempts(static_cast<std::size_t>(suite.runs), 0);
    surfaces.reserve(static_cast<std::size_t>(suite.runs));
    for (int r = 0; r < suite.runs; ++r) {
        bool accepted = false;
        for (std::uint64_t a = 0; a < 64; ++a) {
            CostSurface s = CostSurface::build(
                smoothed,
                derive_seed(suite.master_seed, streams::kSurface,
                            (a << 32) | static_cast<std::uint64_t>(r)),
                suite.surface_floor);
            if (!s.degenerate()) {
                surfaces.push_back(std::move(s));
                attempts[static_cast<std::size_t>(r)] =
                    static_cast<int>(a) + 1;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw DataError("could not build a non-degenerate surface for "
                            "run " +
                            std::to_string(r));
    }
    report.source_hash = surfaces.front().source_hash();

    std::vector<std::uint64_t> config_seeds(n_configs);
    for (std::size_t c = 0; c < n_configs; ++c)
        config_seeds[c] = derive_seed(suite.master_seed, streams::kConfig,
                                      fnv1a64(suite.configs[c].name));

    std::vector<std::vector<std::vector<double>>> results(
        n_configs, std::vector<std::vector<double>>(
                       static_cast<std::size_t>(suite.runs)));

    const std::size_t total_tasks =
        n_configs * static_cast<std::size_t>(suite.runs);
    std::atomic<std::size_t> next_task{0};
    std::vector<std::string> failures;
    std::mutex failures_mu;

    auto worker = [&]() {
        for (;;) {
            const std::size_t t = next_task.fetch_add(1);
            if (t >= total_tasks) return;
            const std::size_t c = t / static_cast<std::size_t>(suite.runs);
            const int r = static_cast<int>(t % static_cast<std::size_t>(suite.runs));
            const SuiteConfig& sc = suite.configs[c];
            const CostSurface& surface = surfaces[static_cast<std::size_t>(r)];
            try {
                fs::path log_path;
                if (!out_dir.empty())
                    log_path = fs::path(out_dir) /
                               ("runlog-" + sc.name + "-" + std::to_string(r) +
                                ".jsonl");
                std::vector<double>& regrets =
                    results[c][static_cast<std::size_t>(r)];
                if (!out_dir.empty() &&
                    try_resume(log_path, sc.name, r, surface, suite.budget,
                               regrets))
                    continue;
                std::vector<std::string> record_lines;
                execute_pair(sc, suite, surface, r, config_seeds[c], regrets,
                             record_lines);
                if (!out_dir.empty()) {
                    json meta;
                    meta["meta"]["config"] = sc.name;
                    meta["meta"]["run"] = r;
                    meta["meta"]["surface_seed"] = surface.seed();
                    meta["meta"]["surface_hash"] =
                        hex64(surface.surface_hash());
                    meta["meta"]["attempts"] =
                        attempts[static_cast<std::size_t>(r)];
                    meta["meta"]["budget"] = suite.budget;
                    meta["meta"]["config_seed"] = hex64(config_seeds[c]);
                    std::string content = meta.dump();
                    content += '\n';
                    for (const auto& line : record_lines) {
                        content += line;
                        content += '\n';
                    }
                    atomic_write(log_path, content);
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failures_mu);
                failures.push_back(sc.name + " run " + std::to_string(r) +
                                   ": " + e.what());
                return;
            }
        }
    };

    unsigned n_threads = suite.threads > 0
                             ? static_cast<unsigned>(suite.threads)
                             : std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(
        std::min<std::size_t>(n_threads, total_tasks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (!failures.empty()) {
        std::string msg = "benchmark failures:";
        for (const auto& f : failures) msg += "\n  " + f;
        throw DataError(msg);
    }

    for (std::size_t c = 0; c < n_configs; ++c) {
        ConfigStats st;
        st.name = suite.configs[c].name;
        st.final_regrets.reserve(static_cast<std::size_t>(suite.runs));
        for (int r = 0; r < suite.runs; ++r)
            st.final_regrets.push_back(
                results[c][static_cast<std::size_t>(r)].back());
        st.median_regret = nearest_rank_percentile(st.final_regrets, 50.0);
        st.p95_regret = nearest_rank_percentile(st.final_regrets, 95.0);
        st.iteration_median.reserve(static_cast<std::size_t>(suite.budget));
        for (int k = 0; k < suite.budget; ++k) {
            std::vector<double> at_k;
            at_k.reserve(static_cast<std::size_t>(suite.runs));
            for (int r = 0; r < suite.runs; ++r)
                at_k.push_back(results[c][static_cast<std::size_t>(r)]
                                      [static_cast<std::size_t>(k)]);
            st.iteration_median.push_back(
                nearest_rank_percentile(at_k, 50.0));
        }
        report.configs.push_back(std::move(st));
    }
    return report;
}

double nearest_rank_percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw DomainError("percentile of an empty sample");
    if (!(pct > 0.0) || pct > 100.0)
        throw DomainError("percentile must lie in (0, 100]");
    std::sort(values.begin(), values.end());
    const double rank = std::ceil(pct / 100.0 * static_cast<double>(values.size()));
    std::size_t idx = static_cast<std::size_t>(std::max(1.0, rank));
    idx = std::min(idx, values.size());
    return values[idx - 1];
}

std::string format_cell(double median_regret, double p95_regret) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f (%.1f)", 100.0 * median_regret,
                  100.0 * p95_regret);
    return buf;
}

namespace {

const ConfigStats* find_config(const BenchmarkReport& report,
                               const std::string& name) {
    for (const auto& st : report.configs)
        if (st.name == name) return &st;
    return nullptr;
}

std::string build_report_txt(const BenchmarkReport& report) {
    static const char* kKernels[] = {"se", "rq", "m32", "m52", "2mat"};
    static const char* kColumns[] = {"ei-sf1-fixed",  "ei-sf1-learned",
                                     "ei-sf2-fixed",  "ei-sf2-learned",
                                     "pi-sf1-fixed",  "pi-sf1-learned",
                                     "es-sf1-fixed"};
    std::ostringstream out;
    out << "Normalized regret, percent: median (95th percentile) over "
        << report.runs << " runs, " << report.budget << " iterations\n\n";

    std::vector<std::string> columns;
    for (const char* col : kColumns)
        for (const char* k : kKernels)
            if (find_config(report, std::string(k) + "-" + col)) {
                columns.push_back(col);
                break;
            }
    std::vector<std::string> kernels;
    for (const char* k : kKernels)
        for (const auto& col : columns)
            if (find_config(report, std::string(k) + "-" + col)) {
                kernels.push_back(k);
                break;
            }

    if (!columns.empty()) {
        out << "kernel  ";
        for (const auto& col : columns) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%-16s", col.c_str());
            out << buf;
        }
        out << '\n';
        for (const auto& k : kernels) {
            char kbuf[16];
            std::snprintf(kbuf, sizeof kbuf, "%-8s", k.c_str());
            out << kbuf;
            for (const auto& col : columns) {
                const ConfigStats* st = find_config(report, k + "-" + col);
                char buf[32];
                std::snprintf(buf, sizeof buf, "%-16s",
                              st ? format_cell(st->median_regret,
                                               st->p95_regret)
                                       .c_str()
                                 : "-");
                out << buf;
            }
            out << '\n';
        }
    }
    if (const ConfigStats* st = find_config(report, "random")) {
        out << '\n'
            << "random  " << format_cell(st->median_regret, st->p95_regret)
            << "   (uniform-random baseline, same budget)\n";
    }

    const ConfigStats* se = find_config(report, "se-ei-sf1-fixed");
    if (se) {
        bool any = false;
        std::ostringstream section;
        section << "\nKernel ordering (ei-sf1-fixed), expectation: se median "
                   ">= each Matern median\n";
        for (const char* m : {"m32", "m52", "2mat"}) {
            const ConfigStats* st =
                find_config(report, std::string(m) + "-ei-sf1-fixed");
            if (!st) continue;
            any = true;
            const bool holds = se->median_regret >= st->median_regret;
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "  se vs %-4s %8.4f%% >= %8.4f%% : %s\n", m,
                          100.0 * se->median_regret, 100.0 * st->median_regret,
                          holds ? "holds" : "DEVIATION");
            section << buf;
        }
        if (any) out << section.str();
    }

    out << "\nNotes:\n"
           "  incumbent: optimizer runs report the posterior-mean minimum; "
           "the random baseline reports its best noisy observation\n"
           "  percentiles: nearest-rank over the per-run final regrets\n";
    return out.str();
}

} // namespace

void write_report_files(const BenchmarkReport& report,
                        const BenchmarkSuite& suite,
                        const std::string& out_dir) {
    fs::create_directories(out_dir);

    std::string report_csv = "config,median_regret,p95_regret\n";
    for (const auto& st : report.configs)
        report_csv += st.name + "," + format_double(st.median_regret) + "," +
                      format_double(st.p95_regret) + "\n";
    atomic_write(fs::path(out_dir) / "report.csv", report_csv);

    std::string curves_csv = "config,iteration,median_regret\n";
    for (const auto& st : report.configs)
        for (std::size_t k = 0; k < st.iteration_median.size(); ++k)
            curves_csv += st.name + "," + std::to_string(k + 1) + "," +
                          format_double(st.iteration_median[k]) + "\n";
    atomic_write(fs::path(out_dir) / "curves.csv", curves_csv);

    atomic_write(fs::path(out_dir) / "report.txt", build_report_txt(report));

    json manifest;
    manifest["master_seed"] = report.master_seed;
    manifest["runs"] = report.runs;
    manifest["budget"] = report.budget;
    manifest["v_star"] = suite.v_star;
    manifest["observed_cells"] = suite.observed_cells;
    manifest["surface_floor"] = suite.surface_floor;
    manifest["timing"] = suite.timing;
    manifest["source_hash"] = hex64(report.source_hash);
    manifest["percentile_rule"] = "nearest-rank";
    manifest["incumbent"]["optimizer"] = "posterior-mean minimum";
    manifest["incumbent"]["random"] = "best noisy observation";
    manifest["configs"] = json::array();
    for (const auto& st : report.configs) {
        json c;
        c["name"] = st.name;
        c["config_seed"] = hex64(derive_seed(report.master_seed,
                                             streams::kConfig,
                                             fnv1a64(st.name)));
        manifest["configs"].push_back(c);
    }
    atomic_write(fs::path(out_dir) / "manifest.json", manifest.dump(2));
}

std::vector<ReportRow> load_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report: " + path);
    std::string line;
    if (!std::getline(in, line) ||
        trim(line) != "config,median_regret,p95_regret")
        throw DataError("report CSV: unexpected header");
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty()) continue;
        auto parts = split(t, ',');
        if (parts.size() != 3)
            throw DataError("report CSV: bad row: " + t);
        ReportRow row;
        row.name = parts[0];
        row.median_regret = std::strtod(parts[1].c_str(), nullptr);
        row.p95_regret = std::strtod(parts[2].c_str(), nullptr);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace gaitopt

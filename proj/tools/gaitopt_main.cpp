#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "gaitopt/benchmark.hpp"
#include "gaitopt/bo.hpp"
#include "gaitopt/errors.hpp"
#include "gaitopt/pattern.hpp"
#include "gaitopt/plant.hpp"
#include "gaitopt/velocity.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace gaitopt;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

/// Command-level argument problems (bad --theta format and the like) that
/// CLI11 cannot catch itself.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Number formatting for the ask/tell text protocol: full precision, but
/// always with a decimal point ("645.0", not "645").
std::string cli_num(double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eEnN") == std::string::npos) s += ".0";
    return s;
}

json params_json(const ControllerParams& p) {
    json j;
    j["wavelength_um"] = p.wavelength_um;
    j["duty_pct"] = p.duty_cycle_pct;
    return j;
}

/// Key-value doc -> JSON object. Integer-looking values stay exact JSON
/// integers (seeds!), other numerics become doubles, `true`/`false` become
/// booleans, the rest stay strings.
json kv_to_json(const KeyValueDoc& doc) {
    json out = json::object();
    for (const auto& [key, value] : doc.items()) {
        if (!value.empty() &&
            value.find_first_not_of("0123456789") == std::string::npos) {
            errno = 0;
            char* end = nullptr;
            unsigned long long u = std::strtoull(value.c_str(), &end, 10);
            if (errno == 0 && end && *end == '\0') {
                out[key] = static_cast<std::uint64_t>(u);
                continue;
            }
        }
        char* end = nullptr;
        double d = std::strtod(value.c_str(), &end);
        if (end != value.c_str() && end && *end == '\0')
            out[key] = d;
        else if (value == "true")
            out[key] = true;
        else if (value == "false")
            out[key] = false;
        else
            out[key] = value;
    }
    return out;
}

KeyValueDoc json_to_kv(const json& obj, const char* what) {
    if (!obj.is_object())
        throw DataError(std::string("state file: ") + what +
                        " must be an object");
    KeyValueDoc doc;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const json& v = it.value();
        if (v.is_string())
            doc.set(it.key(), v.get<std::string>());
        else if (v.is_boolean())
            doc.set(it.key(), v.get<bool>() ? "true" : "false");
        else if (v.is_number_unsigned())
            doc.set(it.key(), std::to_string(v.get<unsigned long long>()));
        else if (v.is_number_integer())
            doc.set(it.key(), std::to_string(v.get<long long>()));
        else if (v.is_number_float())
            doc.set_double(it.key(), v.get<double>());
        else
            throw DataError(std::string("state file: unsupported value for ") +
                            it.key());
    }
    return doc;
}

/// RAII advisory lock (<state>.lock), held across read-modify-write so
/// concurrent CLI invocations serialize on the same state file.
class FileLock {
  public:
    explicit FileLock(const std::string& path) {
        fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) throw DataError("cannot open lock file: " + path);
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            fd_ = -1;
            throw DataError("cannot lock: " + path);
        }
    }
    ~FileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

  private:
    int fd_ = -1;
};

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        out << content;
        if (!out) throw DataError("short write to " + tmp);
    }
    fs::rename(tmp, path);
}

constexpr const char* kStateFormat = "gaitopt-state-v1";

void save_state(const std::string& path, const BoState& state) {
    json st;
    st["format"] = kStateFormat;
    st["config"] = kv_to_json(bo_config_to_kv(state.config()));
    st["phase"] = state.awaiting_tell() ? "awaiting_tell" : "idle";
    json ds = json::array();
    for (const auto& o : state.dataset().points)
        ds.push_back(json::array({o.params.wavelength_um,
                                  o.params.duty_cycle_pct, o.cost}));
    st["dataset"] = ds;
    if (state.last_proposed())
        st["last_proposed"] =
            json::array({state.last_proposed()->wavelength_um,
                         state.last_proposed()->duty_cycle_pct});
    else
        st["last_proposed"] = nullptr;
    st["hyperparams"] = kv_to_json(hyperparams_to_kv(state.hyperparams()));
    json runlog = json::array();
    for (const auto& rec : state.runlog()) {
        json r;
        r["iteration"] = rec.iteration;
        r["proposed"] = params_json(rec.proposed);
        r["observed_cost"] = rec.observed_cost;
        r["incumbent"] = params_json(rec.incumbent);
        r["incumbent_mean"] = rec.incumbent_mean;
        r["wall_time_s"] = rec.wall_time_s;
        r["hyperparams"] = kv_to_json(hyperparams_to_kv(rec.hyperparams));
        runlog.push_back(r);
    }
    st["runlog"] = runlog;
    atomic_write(path, st.dump(2) + "\n");
}

ControllerParams params_from_json(const json& j, const char* what) {
    if (j.contains("wavelength_um") && j.contains("duty_pct"))
        return {j.at("wavelength_um").get<double>(),
                j.at("duty_pct").get<double>()};
    if (j.is_array() && j.size() == 2)
        return {j.at(0).get<double>(), j.at(1).get<double>()};
    throw DataError(std::string("state file: malformed ") + what);
}

BoState load_state(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open state file: " + path);
    json st;
    try {
        st = json::parse(in);
    } catch (const std::exception& e) {
        throw DataError("malformed state file: " + std::string(e.what()));
    }
    try {
        if (!st.contains("format") ||
            st.at("format").get<std::string>() != kStateFormat)
            throw DataError("state file: unknown format");
        BoConfig cfg = bo_config_from_kv(json_to_kv(st.at("config"), "config"));
        const std::string phase = st.at("phase").get<std::string>();
        if (phase != "idle" && phase != "awaiting_tell")
            throw DataError("state file: unknown phase: " + phase);
        Dataset data;
        for (const auto& row : st.at("dataset")) {
            if (!row.is_array() || row.size() != 3)
                throw DataError("state file: malformed dataset row");
            data.add({row.at(0).get<double>(), row.at(1).get<double>()},
                     row.at(2).get<double>());
        }
        Hyperparams hp =
            hyperparams_from_kv(json_to_kv(st.at("hyperparams"), "hyperparams"));
        std::optional<ControllerParams> last;
        if (st.contains("last_proposed") && !st.at("last_proposed").is_null())
            last = params_from_json(st.at("last_proposed"), "last_proposed");
        std::vector<RunRecord> runlog;
        for (const auto& r : st.at("runlog")) {
            RunRecord rec;
            rec.iteration = r.at("iteration").get<int>();
            rec.proposed = params_from_json(r.at("proposed"), "proposed");
            rec.observed_cost = r.at("observed_cost").get<double>();
            rec.incumbent = params_from_json(r.at("incumbent"), "incumbent");
            rec.incumbent_mean = r.at("incumbent_mean").get<double>();
            rec.wall_time_s = r.at("wall_time_s").get<double>();
            rec.hyperparams = hyperparams_from_kv(
                json_to_kv(r.at("hyperparams"), "record hyperparams"));
            runlog.push_back(std::move(rec));
        }
        return BoState(std::move(cfg), std::move(data), std::move(hp),
                       phase == "awaiting_tell", last, std::move(runlog));
    } catch (const json::exception& e) {
        throw DataError("malformed state file: " + std::string(e.what()));
    }
}

int cmd_bench(const std::string& config_path, const std::string& out_dir) {
    KeyValueDoc doc;
    if (!config_path.empty()) doc = KeyValueDoc::load(config_path);
    BenchmarkSuite suite = suite_from_kv(doc);
    BenchmarkReport report = run_benchmark(suite, out_dir);
    write_report_files(report, suite, out_dir);
    for (const auto& st : report.configs)
        std::cout << st.name << "  "
                  << format_cell(st.median_regret, st.p95_regret) << "\n";
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

int cmd_fit_velocity(const std::string& trace_path, double f_hz, double t_cut,
                     double v_star) {
    TrackingTrace trace = load_trace_csv(trace_path);
    FitResult fit = fit_movement(trace, f_hz, t_cut);
    json out;
    out["v_m"] = fit.v_m;
    out["offset_b_um"] = fit.offset_b_um;
    out["amplitude_a_um"] = fit.amplitude_a_um;
    out["phase_phi_rad"] = fit.phase_phi_rad;
    out["residual_rms_um"] = fit.residual_rms_um;
    out["cost"] = cost_from_speed(fit.v_m, v_star);
    json cov = json::array();
    for (int i = 0; i < 4; ++i) {
        json row = json::array();
        for (int j = 0; j < 4; ++j) row.push_back(fit.param_cov(i, j));
        cov.push_back(row);
    }
    out["param_cov"] = cov;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_ask(const std::string& state_path, const std::string& config_path) {
    FileLock lock(state_path + ".lock");
    std::optional<BoState> state;
    if (fs::exists(state_path)) {
        if (!config_path.empty())
            throw UsageError("--config applies only to a fresh state file");
        state.emplace(load_state(state_path));
    } else {
        BoConfig cfg;
        if (!config_path.empty())
            cfg = bo_config_from_kv(KeyValueDoc::load(config_path));
        cfg.validate();
        state.emplace(cfg);
    }
    const ControllerParams p = state->ask();
    save_state(state_path, *state);
    std::cout << cli_num(p.wavelength_um) << ',' << cli_num(p.duty_cycle_pct)
              << "\n";
    return 0;
}

int cmd_tell(const std::string& state_path, const std::string& theta_str,
             double cost) {
    double wl = 0.0, duty = 0.0;
    char extra = 0;
    if (std::sscanf(theta_str.c_str(), "%lf,%lf%c", &wl, &duty, &extra) != 2)
        throw UsageError("--theta expects \"<wavelength_um>,<duty_pct>\"");

    FileLock lock(state_path + ".lock");
    BoState state = load_state(state_path);
    state.tell({wl, duty}, cost);
    save_state(state_path, state);
    const RunRecord& rec = state.runlog().back();
    json out;
    out["iteration"] = rec.iteration;
    out["incumbent"] = params_json(rec.incumbent);
    out["incumbent_mean"] = rec.incumbent_mean;
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_pattern(double wavelength_px, double duty_pct, double freq_hz,
                double t, const std::string& out_path, bool pgm, int width,
                int height) {
    LightPattern p;
    p.wavelength_px = wavelength_px;
    p.duty_cycle_frac = duty_pct / 100.0;
    p.frequency_hz = freq_hz;
    p.width_px = width;
    p.height_px = height;
    Bitmap frame = render_pattern(p, t);
    if (pgm)
        write_pgm(out_path, frame);
    else
        write_packed(out_path, frame);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-efficient tuning of light-driven microrobot gaits"};
    app.require_subcommand(1);

    auto* bench = app.add_subcommand(
        "bench", "run a benchmark suite and write report files");
    std::string bench_config, bench_out;
    bench->add_option("--config", bench_config,
                      "flat key-value suite configuration");
    bench->add_option("--out", bench_out, "output directory")->required();

    auto* fitv = app.add_subcommand(
        "fit-velocity", "fit the movement model to a tracking trace CSV");
    std::string fitv_trace;
    double fitv_f = 1.0, fitv_cut = 2.0, fitv_vstar = 6.0;
    fitv->add_option("--trace", fitv_trace, "trace CSV path")->required();
    fitv->add_option("--f-hz", fitv_f, "oscillation frequency [Hz]");
    fitv->add_option("--t-cut", fitv_cut, "transient cutoff [s]");
    fitv->add_option("--v-star", fitv_vstar, "desired speed [%BL/s]");

    auto* ask = app.add_subcommand(
        "ask", "propose the next controller parameters");
    std::string ask_state, ask_config;
    ask->add_option("--state", ask_state, "optimizer state file")->required();
    ask->add_option("--config", ask_config,
                    "key-value optimizer config (fresh state only)");

    auto* tell = app.add_subcommand(
        "tell", "report the measured cost for the last proposal");
    std::string tell_state, tell_theta;
    double tell_cost = 0.0;
    tell->add_option("--state", tell_state, "optimizer state file")
        ->required();
    tell->add_option("--theta", tell_theta,
                     "proposal being answered: <wavelength_um>,<duty_pct>")
        ->required();
    tell->add_option("--cost", tell_cost, "measured cost [%BL/s]")
        ->required();

    auto* pattern = app.add_subcommand(
        "pattern", "render one light-pattern frame to a file");
    double pat_wl = 645.0, pat_duty = 30.0, pat_f = 1.0, pat_t = 0.0;
    std::string pat_out;
    bool pat_pgm = false;
    int pat_w = 1280, pat_h = 1024;
    pattern->add_option("--wavelength-px", pat_wl, "spatial period [px]");
    pattern->add_option("--duty-pct", pat_duty, "lit fraction [%]");
    pattern->add_option("--freq-hz", pat_f, "pattern frequency [Hz]");
    pattern->add_option("--t", pat_t, "frame time [s]");
    pattern->add_option("--out", pat_out, "output file")->required();
    pattern->add_flag("--pgm", pat_pgm, "write text PGM instead of packed bits");
    pattern->add_option("--width", pat_w, "frame width [px]");
    pattern->add_option("--height", pat_h, "frame height [px]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (bench->parsed()) return cmd_bench(bench_config, bench_out);
        if (fitv->parsed())
            return cmd_fit_velocity(fitv_trace, fitv_f, fitv_cut, fitv_vstar);
        if (ask->parsed()) return cmd_ask(ask_state, ask_config);
        if (tell->parsed()) return cmd_tell(tell_state, tell_theta, tell_cost);
        if (pattern->parsed())
            return cmd_pattern(pat_wl, pat_duty, pat_f, pat_t, pat_out,
                               pat_pgm, pat_w, pat_h);
        std::cerr << "no subcommand given\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

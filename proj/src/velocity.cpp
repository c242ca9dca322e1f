#include "gaitopt/velocity.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/QR>

#include "gaitopt/config.hpp"
#include "gaitopt/errors.hpp"

namespace gaitopt {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void TrackingTrace::validate() const {
    if (!(frame_rate_hz > 0.0))
        throw DomainError("frame_rate_hz must be positive");
    if (!(bodylength_um > 0.0))
        throw DomainError("bodylength_um must be positive");
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (!(samples[i].t_s > samples[i - 1].t_s))
            throw DomainError("trace timestamps must be strictly increasing");
}

FitResult fit_movement(const TrackingTrace& trace, double f_hz, double t_cut) {
    trace.validate();
    if (!(f_hz > 0.0)) throw DomainError("oscillation frequency must be positive");

    std::vector<TraceSample> kept;
    kept.reserve(trace.samples.size());
    for (const auto& s : trace.samples)
        if (s.t_s >= t_cut) kept.push_back(s);

    const Eigen::Index n = static_cast<Eigen::Index>(kept.size());
    if (n < 5)
        throw InsufficientDataError(
            "fewer than 5 samples after the transient cutoff");
    const double span = kept.back().t_s - kept.front().t_s;
    if (span + 1e-9 < 2.0 / f_hz)
        throw InsufficientDataError(
            "trace spans less than two oscillation periods after the cutoff");

    Eigen::MatrixXd X(n, 4);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = kept[static_cast<std::size_t>(i)].t_s;
        X(i, 0) = t;
        X(i, 1) = 1.0;
        X(i, 2) = std::sin(kTwoPi * f_hz * t);
        X(i, 3) = std::cos(kTwoPi * f_hz * t);
        y[i] = kept[static_cast<std::size_t>(i)].x_um;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < 4)
        throw DegenerateFitError(
            "rank-deficient movement-model design matrix (frequency aliases "
            "against the sample grid?)");
    Eigen::Vector4d beta = qr.solve(y);

    Eigen::VectorXd resid = y - X * beta;
    const double ssr = resid.squaredNorm();

    FitResult out;
    out.v_m = 100.0 * beta[0] / trace.bodylength_um;
    out.offset_b_um = beta[1];
    out.amplitude_a_um = std::hypot(beta[2], beta[3]);
    out.phase_phi_rad = std::atan2(beta[3], beta[2]);
    if (out.phase_phi_rad >= 3.141592653589793238462643383279502884)
        out.phase_phi_rad -= kTwoPi; // atan2 yields (-pi, pi]; map pi -> -pi
    out.residual_rms_um = std::sqrt(ssr / static_cast<double>(n));
    const double sigma2 = ssr / static_cast<double>(n - 4);
    out.param_cov = sigma2 * (X.transpose() * X).inverse();
    return out;
}

double cost_from_speed(double v_m, double v_star) {
    return std::fabs(v_star - v_m);
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_num(const std::string& s, const char* what) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *trim(end).c_str() != '\0')
        throw DataError(std::string("trace CSV: bad ") + what + ": " + s);
    return v;
}

} // namespace

TrackingTrace load_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trace file: " + path);
    TrackingTrace trace;
    std::string line;
    bool header_seen = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            std::string meta = trim(t.substr(1));
            std::size_t eq = meta.find('=');
            if (eq == std::string::npos) continue; // free-form comment
            std::string key = trim(meta.substr(0, eq));
            std::string value = trim(meta.substr(eq + 1));
            if (key == "bodylength_um")
                trace.bodylength_um = parse_num(value, "bodylength_um");
            else if (key == "frame_rate_hz")
                trace.frame_rate_hz = parse_num(value, "frame_rate_hz");
            continue;
        }
        if (!header_seen) {
            if (t != "t_s,x_um")
                throw DataError("trace CSV: expected header t_s,x_um at line " +
                                std::to_string(lineno));
            header_seen = true;
            continue;
        }
        std::size_t comma = t.find(',');
        if (comma == std::string::npos)
            throw DataError("trace CSV: expected t,x at line " +
                            std::to_string(lineno));
        trace.samples.push_back({parse_num(t.substr(0, comma), "timestamp"),
                                 parse_num(t.substr(comma + 1), "position")});
    }
    if (!header_seen) throw DataError("trace CSV: missing t_s,x_um header");
    trace.validate();
    return trace;
}

void write_trace_csv(const std::string& path, const TrackingTrace& trace) {
    trace.validate();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trace file: " + path);
    out << "# bodylength_um = " << format_double(trace.bodylength_um) << '\n';
    out << "# frame_rate_hz = " << format_double(trace.frame_rate_hz) << '\n';
    out << "t_s,x_um\n";
    for (const auto& s : trace.samples)
        out << format_double(s.t_s) << ',' << format_double(s.x_um) << '\n';
}

} // namespace gaitopt

#include "gaitopt/benchgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "gaitopt/acquisition.hpp"
#include "gaitopt/config.hpp"
#include "gaitopt/errors.hpp"
#include "gaitopt/rng.hpp"

namespace gaitopt {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_increasing(const std::vector<double>& axis, const char* name) {
    if (axis.size() < 2)
        throw DomainError(std::string(name) + " axis needs at least 2 points");
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (!(axis[i] > axis[i - 1]))
            throw DomainError(std::string(name) +
                              " axis must be strictly increasing");
}
} // namespace

bool GridData::observed(std::size_t i, std::size_t j) const {
    return !std::isnan(at(i, j));
}

std::size_t GridData::observed_count() const {
    std::size_t n = 0;
    for (double v : cost)
        if (!std::isnan(v)) ++n;
    return n;
}

void GridData::validate() const {
    require_increasing(wavelength_px, "wavelength");
    require_increasing(duty_pct, "duty");
    if (cost.size() != nx() * ny())
        throw DomainError("grid cell count does not match the axes");
    if (!(noise_std >= 0.0))
        throw DomainError("grid noise std must be non-negative");
}

SearchBox GridData::box() const {
    SearchBox b;
    b.wavelength_min_um = wavelength_px.front() * kPixelPitchUm;
    b.wavelength_max_um = wavelength_px.back() * kPixelPitchUm;
    b.duty_min_pct = duty_pct.front();
    b.duty_max_pct = duty_pct.back();
    return b;
}

GridData standard_axes() {
    GridData g;
    for (int w = 200; w <= 800; w += 50)
        g.wavelength_px.push_back(static_cast<double>(w));
    for (int d = 20; d <= 50; d += 5)
        g.duty_pct.push_back(static_cast<double>(d));
    g.cost.assign(g.nx() * g.ny(), kNaN);
    return g;
}

GridData default_plant_grid(const PlantSpec& plant, double v_star,
                            std::size_t observed, std::uint64_t mask_seed) {
    plant.validate();
    GridData g = standard_axes();
    const std::size_t total = g.nx() * g.ny();
    if (observed > total || 2 * observed < total)
        throw DomainError("observed cell count must cover at least half the grid");

    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) {
            ControllerParams theta{g.wavelength_px[i] * kPixelPitchUm,
                                   g.duty_pct[j]};
            g.at(i, j) = cost_from_speed(plant.speed_map(theta), v_star);
        }

    // Mask cells in seeded shuffle order, never letting a row or column
    // drop below two observations.
    std::vector<std::size_t> order(total);
    for (std::size_t k = 0; k < total; ++k) order[k] = k;
    RandomStream rng(derive_seed(mask_seed, streams::kGridMask, 0));
    for (std::size_t k = total - 1; k > 0; --k) {
        std::size_t j = static_cast<std::size_t>(rng.next_u64() % (k + 1));
        std::swap(order[k], order[j]);
    }
    std::vector<std::size_t> row_obs(g.nx(), g.ny()), col_obs(g.ny(), g.nx());
    std::size_t to_mask = total - observed;
    for (std::size_t k = 0; k < total && to_mask > 0; ++k) {
        const std::size_t i = order[k] / g.ny();
        const std::size_t j = order[k] % g.ny();
        if (row_obs[i] <= 2 || col_obs[j] <= 2) continue;
        g.at(i, j) = kNaN;
        --row_obs[i];
        --col_obs[j];
        --to_mask;
    }
    if (to_mask > 0)
        throw DomainError("cannot mask that many cells while keeping two "
                          "observations per grid line");
    return g;
}

namespace {

/// Linear estimate along one axis through the nearest originally-observed
/// neighbors; nearest value where only one side has data. Returns false when
/// the whole line is missing.
bool axis_estimate(const std::vector<double>& axis,
                   const std::function<bool(std::size_t)>& obs,
                   const std::function<double(std::size_t)>& val,
                   std::size_t k, double& out) {
    std::ptrdiff_t lo = -1, hi = -1;
    for (std::ptrdiff_t q = static_cast<std::ptrdiff_t>(k) - 1; q >= 0; --q)
        if (obs(static_cast<std::size_t>(q))) { lo = q; break; }
    for (std::size_t q = k + 1; q < axis.size(); ++q)
        if (obs(q)) { hi = static_cast<std::ptrdiff_t>(q); break; }
    if (lo >= 0 && hi >= 0) {
        const double x = axis[k];
        const double xl = axis[static_cast<std::size_t>(lo)];
        const double xh = axis[static_cast<std::size_t>(hi)];
        const double w = (xh - x) / (xh - xl);
        out = w * val(static_cast<std::size_t>(lo)) +
              (1.0 - w) * val(static_cast<std::size_t>(hi));
        return true;
    }
    if (lo >= 0) { out = val(static_cast<std::size_t>(lo)); return true; }
    if (hi >= 0) { out = val(static_cast<std::size_t>(hi)); return true; }
    return false;
}

} // namespace

GridData fill_missing(const GridData& g) {
    g.validate();
    const std::size_t total = g.nx() * g.ny();
    if (2 * g.observed_count() < total)
        throw FillError("fewer than half the grid cells are observed");
    for (std::size_t i = 0; i < g.nx(); ++i) {
        std::size_t n = 0;
        for (std::size_t j = 0; j < g.ny(); ++j) n += g.observed(i, j) ? 1 : 0;
        if (n < 2) throw FillError("a wavelength line has fewer than 2 observations");
    }
    for (std::size_t j = 0; j < g.ny(); ++j) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < g.nx(); ++i) n += g.observed(i, j) ? 1 : 0;
        if (n < 2) throw FillError("a duty line has fewer than 2 observations");
    }

    GridData out = g;
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) {
            if (g.observed(i, j)) continue;
            double ex = 0.0, ey = 0.0;
            const bool has_x = axis_estimate(
                g.wavelength_px, [&](std::size_t q) { return g.observed(q, j); },
                [&](std::size_t q) { return g.at(q, j); }, i, ex);
            const bool has_y = axis_estimate(
                g.duty_pct, [&](std::size_t q) { return g.observed(i, q); },
                [&](std::size_t q) { return g.at(i, q); }, j, ey);
            if (has_x && has_y)
                out.at(i, j) = 0.5 * (ex + ey);
            else if (has_x)
                out.at(i, j) = ex;
            else if (has_y)
                out.at(i, j) = ey;
            else
                throw FillError("missing cell has no observed neighbor on "
                                "either axis");
        }
    return out;
}

GridData smooth3x3(const GridData& g) {
    g.validate();
    if (g.observed_count() != g.nx() * g.ny())
        throw DomainError("smoothing requires a complete grid");
    GridData out = g;
    const std::ptrdiff_t nx = static_cast<std::ptrdiff_t>(g.nx());
    const std::ptrdiff_t ny = static_cast<std::ptrdiff_t>(g.ny());
    for (std::ptrdiff_t i = 0; i < nx; ++i)
        for (std::ptrdiff_t j = 0; j < ny; ++j) {
            double sum = 0.0;
            int count = 0;
            for (std::ptrdiff_t di = -1; di <= 1; ++di)
                for (std::ptrdiff_t dj = -1; dj <= 1; ++dj) {
                    const std::ptrdiff_t a = i + di, b = j + dj;
                    if (a < 0 || a >= nx || b < 0 || b >= ny) continue;
                    sum += g.at(static_cast<std::size_t>(a),
                                static_cast<std::size_t>(b));
                    ++count;
                }
            out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                sum / count;
        }
    return out;
}

namespace {

/// Second-derivative moments of the natural cubic spline through
/// (t[k], g(k)); endpoints zero.
std::vector<double> natural_moments(const std::vector<double>& t,
                                    const std::function<double(std::size_t)>& g) {
    const std::size_t n = t.size();
    std::vector<double> m(n, 0.0);
    if (n < 3) return m;
    std::vector<double> cp(n, 0.0), dp(n, 0.0);
    {
        const double h0 = t[1] - t[0], h1 = t[2] - t[1];
        const double diag = 2.0 * (h0 + h1);
        cp[1] = h1 / diag;
        dp[1] = 6.0 * ((g(2) - g(1)) / h1 - (g(1) - g(0)) / h0) / diag;
    }
    for (std::size_t k = 2; k + 1 < n; ++k) {
        const double h0 = t[k] - t[k - 1], h1 = t[k + 1] - t[k];
        const double denom = 2.0 * (h0 + h1) - h0 * cp[k - 1];
        cp[k] = h1 / denom;
        dp[k] = (6.0 * ((g(k + 1) - g(k)) / h1 - (g(k) - g(k - 1)) / h0) -
                 h0 * dp[k - 1]) /
                denom;
    }
    for (std::size_t k = n - 2; k >= 1; --k) {
        m[k] = dp[k] - cp[k] * m[k + 1];
        if (k == 1) break;
    }
    return m;
}

double eval_segment(double fa, double fb, double ma, double mb, double a,
                    double b, double h) {
    return a * fa + b * fb +
           ((a * a * a - a) * ma + (b * b * b - b) * mb) * h * h / 6.0;
}

std::size_t locate(const std::vector<double>& t, double x) {
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::ptrdiff_t k = std::distance(t.begin(), it) - 1;
    k = std::max<std::ptrdiff_t>(0, std::min<std::ptrdiff_t>(
                                        k, static_cast<std::ptrdiff_t>(t.size()) - 2));
    return static_cast<std::size_t>(k);
}

void hash_doubles(std::uint64_t& h, const double* v, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v[k], sizeof(double));
        h = fnv1a64(bytes, sizeof(double), h);
    }
}

void hash_u64(std::uint64_t& h, std::uint64_t v) {
    unsigned char bytes[8];
    for (int k = 0; k < 8; ++k)
        bytes[k] = static_cast<unsigned char>((v >> (8 * k)) & 0xFF);
    h = fnv1a64(bytes, 8, h);
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

CostSurface CostSurface::build(const GridData& grid, std::uint64_t seed,
                               double floor) {
    grid.validate();
    if (grid.observed_count() != grid.nx() * grid.ny())
        throw DomainError("surface construction requires a complete grid");
    if (!(floor > 0.0)) throw DomainError("surface floor must be positive");

    CostSurface s;
    s.seed_ = seed;
    s.floor_ = floor;
    s.noise_std_ = grid.noise_std;
    s.xs_.reserve(grid.nx());
    for (double w : grid.wavelength_px) s.xs_.push_back(w * kPixelPitchUm);
    s.ys_ = grid.duty_pct;
    s.box_ = grid.box();

    std::uint64_t h = 0xCBF29CE484222325ULL;
    hash_u64(h, grid.nx());
    hash_u64(h, grid.ny());
    hash_doubles(h, grid.wavelength_px.data(), grid.nx());
    hash_doubles(h, grid.duty_pct.data(), grid.ny());
    hash_doubles(h, grid.cost.data(), grid.cost.size());
    hash_doubles(h, &grid.noise_std, 1);
    s.source_hash_ = h;

    s.f_ = grid.cost;
    RandomStream rng(seed);
    for (double& v : s.f_) v += grid.noise_std * rng.normal();

    hash_u64(h, seed);
    hash_doubles(h, s.f_.data(), s.f_.size());
    s.surface_hash_ = h;

    const std::size_t nx = grid.nx(), ny = grid.ny();
    s.mx_.assign(nx * ny, 0.0);
    s.my_.assign(nx * ny, 0.0);
    s.mxy_.assign(nx * ny, 0.0);
    for (std::size_t j = 0; j < ny; ++j) {
        auto col = natural_moments(
            s.xs_, [&](std::size_t i) { return s.f_[i * ny + j]; });
        for (std::size_t i = 0; i < nx; ++i) s.mx_[i * ny + j] = col[i];
    }
    for (std::size_t i = 0; i < nx; ++i) {
        auto row = natural_moments(
            s.ys_, [&](std::size_t j) { return s.f_[i * ny + j]; });
        for (std::size_t j = 0; j < ny; ++j) s.my_[i * ny + j] = row[j];
    }
    for (std::size_t i = 0; i < nx; ++i) {
        auto row = natural_moments(
            s.ys_, [&](std::size_t j) { return s.mx_[i * ny + j]; });
        for (std::size_t j = 0; j < ny; ++j) s.mxy_[i * ny + j] = row[j];
    }

    MaximizeResult best = maximize_on_box(
        [&s](const ControllerParams& p) { return -s.value(p); }, s.box_, 401,
        301);
    s.theta_opt_ = best.params;
    s.j_opt_ = -best.value;
    s.degenerate_ = s.j_opt_ <= s.floor_;
    return s;
}

double CostSurface::spline_eval(double x_um, double y_pct) const {
    const std::size_t ny = ys_.size();
    const std::size_t ix = locate(xs_, x_um);
    const std::size_t iy = locate(ys_, y_pct);
    const double hx = xs_[ix + 1] - xs_[ix];
    const double hy = ys_[iy + 1] - ys_[iy];
    const double bx = (x_um - xs_[ix]) / hx, ax = 1.0 - bx;
    const double by = (y_pct - ys_[iy]) / hy, ay = 1.0 - by;

    auto row_at_y = [&](std::size_t i, const std::vector<double>& vals,
                        const std::vector<double>& moms) {
        return eval_segment(vals[i * ny + iy], vals[i * ny + iy + 1],
                            moms[i * ny + iy], moms[i * ny + iy + 1], ay, by,
                            hy);
    };
    const double g_lo = row_at_y(ix, f_, my_);
    const double g_hi = row_at_y(ix + 1, f_, my_);
    const double m_lo = row_at_y(ix, mx_, mxy_);
    const double m_hi = row_at_y(ix + 1, mx_, mxy_);
    return eval_segment(g_lo, g_hi, m_lo, m_hi, ax, bx, hx);
}

double CostSurface::value(const ControllerParams& theta) const {
    if (!box_.contains(theta))
        throw DomainError("surface evaluated outside its box");
    const ControllerParams p = box_.clamp(theta);
    return std::max(spline_eval(p.wavelength_um, p.duty_cycle_pct), floor_);
}

std::string CostSurface::manifest_json() const {
    nlohmann::ordered_json j;
    j["axes"]["wavelength_um"] = xs_;
    j["axes"]["duty_pct"] = ys_;
    j["seed"] = seed_;
    j["noise_std"] = noise_std_;
    j["optimum"]["wavelength_um"] = theta_opt_.wavelength_um;
    j["optimum"]["duty_pct"] = theta_opt_.duty_cycle_pct;
    j["optimum"]["cost"] = j_opt_;
    j["floor"] = floor_;
    j["degenerate"] = degenerate_;
    j["source_hash"] = hex64(source_hash_);
    j["surface_hash"] = hex64(surface_hash_);
    return j.dump(2);
}

double normalized_regret(const CostSurface& surface,
                         const ControllerParams& theta) {
    return (surface.value(theta) - surface.j_opt()) / surface.j_opt();
}

GridData load_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open grid file: " + path);

    struct Row {
        double w, d, c;
    };
    std::vector<Row> rows;
    double noise_std = 0.1;
    std::string line;
    bool header_seen = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = line;
        while (!t.empty() && (t.back() == '\r' || t.back() == '\n' ||
                              t.back() == ' ' || t.back() == '\t'))
            t.pop_back();
        std::size_t start = t.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        t = t.substr(start);
        if (t[0] == '#') {
            std::size_t eq = t.find('=');
            if (eq != std::string::npos) {
                std::string key = t.substr(1, eq - 1);
                key.erase(0, key.find_first_not_of(" \t"));
                key.erase(key.find_last_not_of(" \t") + 1);
                if (key == "noise_std")
                    noise_std = std::strtod(t.c_str() + eq + 1, nullptr);
            }
            continue;
        }
        if (!header_seen) {
            if (t != "wavelength_px,duty_pct,cost")
                throw DataError(
                    "grid CSV: expected header wavelength_px,duty_pct,cost "
                    "at line " +
                    std::to_string(lineno));
            header_seen = true;
            continue;
        }
        Row r{};
        char extra = 0;
        if (std::sscanf(t.c_str(), "%lf,%lf,%lf%c", &r.w, &r.d, &r.c, &extra) != 3)
            throw DataError("grid CSV: bad row at line " + std::to_string(lineno));
        rows.push_back(r);
    }
    if (!header_seen) throw DataError("grid CSV: missing header");
    if (rows.empty()) throw DataError("grid CSV: no observations");

    GridData g;
    g.noise_std = noise_std;
    for (const auto& r : rows) {
        g.wavelength_px.push_back(r.w);
        g.duty_pct.push_back(r.d);
    }
    auto uniq = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(g.wavelength_px);
    uniq(g.duty_pct);
    g.cost.assign(g.nx() * g.ny(), kNaN);
    for (const auto& r : rows) {
        auto iw = std::lower_bound(g.wavelength_px.begin(),
                                   g.wavelength_px.end(), r.w);
        auto id = std::lower_bound(g.duty_pct.begin(), g.duty_pct.end(), r.d);
        const std::size_t i =
            static_cast<std::size_t>(iw - g.wavelength_px.begin());
        const std::size_t j = static_cast<std::size_t>(id - g.duty_pct.begin());
        if (g.observed(i, j))
            throw DataError("grid CSV: duplicate cell (" +
                            format_double(r.w) + ", " + format_double(r.d) + ")");
        g.at(i, j) = r.c;
    }
    g.validate();
    return g;
}

void write_grid_csv(const std::string& path, const GridData& grid) {
    grid.validate();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write grid file: " + path);
    out << "# noise_std = " << format_double(grid.noise_std) << '\n';
    out << "wavelength_px,duty_pct,cost\n";
    for (std::size_t i = 0; i < grid.nx(); ++i)
        for (std::size_t j = 0; j < grid.ny(); ++j)
            if (grid.observed(i, j))
                out << format_double(grid.wavelength_px[i]) << ','
                    << format_double(grid.duty_pct[j]) << ','
                    << format_double(grid.at(i, j)) << '\n';
}

} // namespace gaitopt

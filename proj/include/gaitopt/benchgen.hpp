#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaitopt/params.hpp"
#include "gaitopt/plant.hpp"

namespace gaitopt {

/// Rectangular cost grid over projector-plane axes. Cells are row-major
/// (wavelength-major): cost[i * duty_pct.size() + j]. Missing observations
/// are NaN.
struct GridData {
    std::vector<double> wavelength_px; ///< strictly increasing
    std::vector<double> duty_pct;      ///< strictly increasing
    std::vector<double> cost;          ///< row-major; NaN = missing
    double noise_std = 0.1;            ///< per-observation noise, cost units

    std::size_t nx() const { return wavelength_px.size(); }
    std::size_t ny() const { return duty_pct.size(); }
    double& at(std::size_t i, std::size_t j) { return cost[i * ny() + j]; }
    double at(std::size_t i, std::size_t j) const { return cost[i * ny() + j]; }
    bool observed(std::size_t i, std::size_t j) const;
    std::size_t observed_count() const;

    void validate() const;
    /// Parameter box spanned by the axes, in controller units
    /// (wavelength converted at kPixelPitchUm per pixel).
    SearchBox box() const;
};

/// The standard 13 x 7 layout: wavelength 200..800 px step 50,
/// duty 20..50 % step 5.
GridData standard_axes();

/// Standard-layout grid measured against the plant's ground truth:
/// cost = |v_star - speed| at each node, with `observed` cells kept by a
/// seeded mask (every row and column keeps at least two observations).
GridData default_plant_grid(const PlantSpec& plant, double v_star,
                            std::size_t observed, std::uint64_t mask_seed);

/// Fill missing cells by averaging the per-axis linear interpolants through
/// the nearest originally-observed neighbors (nearest-value extension where
/// only one side has data). Observed cells pass through unchanged.
GridData fill_missing(const GridData& g);

/// 3x3 mean filter; windows shrink to the in-grid subset at edges.
GridData smooth3x3(const GridData& g);

/// Continuous benchmark surface: per-run noisy resample of a smoothed grid,
/// interpolated by a natural bicubic spline, floored, with its own optimum
/// located at build time.
class CostSurface {
  public:
    /// grid must be complete (no NaN). Adds N(0, grid.noise_std^2) to every
    /// cell (row-major order, stream seeded by `seed`), fits the spline, and
    /// locates the minimum on a 401 x 301 lattice plus local refinement.
    static CostSurface build(const GridData& grid, std::uint64_t seed,
                             double floor = 1e-3);

    /// Cost at theta (floored). Throws outside the box.
    double value(const ControllerParams& theta) const;

    const SearchBox& box() const { return box_; }
    const ControllerParams& theta_opt() const { return theta_opt_; }
    double j_opt() const { return j_opt_; }
    /// True when the floor truncated the optimum; such surfaces are rejected
    /// and rebuilt with a fresh seed by the benchmark harness.
    bool degenerate() const { return degenerate_; }
    double floor() const { return floor_; }
    std::uint64_t seed() const { return seed_; }
    /// Fingerprint of the source grid the surface was built from.
    std::uint64_t source_hash() const { return source_hash_; }
    /// Fingerprint of the built surface (source, seed, noisy values).
    std::uint64_t surface_hash() const { return surface_hash_; }

    std::string manifest_json() const;

  private:
    CostSurface() = default;
    double spline_eval(double x_um, double y_pct) const;

    std::vector<double> xs_; // knot positions, wavelength um
    std::vector<double> ys_; // knot positions, duty %
    std::vector<double> f_;  // noisy node values, row-major
    std::vector<double> mx_; // d2/dx2 spline moments
    std::vector<double> my_; // d2/dy2 spline moments
    std::vector<double> mxy_;
    SearchBox box_;
    ControllerParams theta_opt_;
    double j_opt_ = 0.0;
    double floor_ = 1e-3;
    bool degenerate_ = false;
    std::uint64_t seed_ = 0;
    std::uint64_t source_hash_ = 0;
    std::uint64_t surface_hash_ = 0;
    double noise_std_ = 0.1;
};

/// (J(theta) - J_opt) / J_opt.
double normalized_regret(const CostSurface& surface, const ControllerParams& theta);

/// Sparse grid CSV: header wavelength_px,duty_pct,cost; one row per
/// observed cell. `# key = value` lines may set noise_std.
GridData load_grid_csv(const std::string& path);
void write_grid_csv(const std::string& path, const GridData& grid);

} // namespace gaitopt

#pragma once

#include <array>
#include <cmath>

#include "gaitopt/errors.hpp"

namespace gaitopt {

/// Camera/projector pixel pitch in micrometers.
inline constexpr double kPixelPitchUm = 1.29;

/// The two controller parameters of the traveling light pattern.
struct ControllerParams {
    double wavelength_um = 0.0; ///< spatial period of the stripe pattern
    double duty_cycle_pct = 0.0; ///< illuminated fraction per period, percent

    friend bool operator==(const ControllerParams&,
                           const ControllerParams&) = default;
};

/// Axis-aligned search box over controller parameters. Also owns the
/// normalization used throughout the optimizer: model code works on
/// [0,1]^2 coordinates, physical units appear only at the edges.
struct SearchBox {
    double wavelength_min_um = 200.0 * kPixelPitchUm; // 258 um
    double wavelength_max_um = 800.0 * kPixelPitchUm; // 1032 um
    double duty_min_pct = 20.0;
    double duty_max_pct = 50.0;

    bool contains(const ControllerParams& p, double tol = 1e-9) const {
        return p.wavelength_um >= wavelength_min_um - tol &&
               p.wavelength_um <= wavelength_max_um + tol &&
               p.duty_cycle_pct >= duty_min_pct - tol &&
               p.duty_cycle_pct <= duty_max_pct + tol;
    }

    ControllerParams clamp(ControllerParams p) const {
        p.wavelength_um = std::fmin(std::fmax(p.wavelength_um, wavelength_min_um),
                                    wavelength_max_um);
        p.duty_cycle_pct = std::fmin(std::fmax(p.duty_cycle_pct, duty_min_pct),
                                     duty_max_pct);
        return p;
    }

    std::array<double, 2> normalized(const ControllerParams& p) const {
        return {(p.wavelength_um - wavelength_min_um) /
                    (wavelength_max_um - wavelength_min_um),
                (p.duty_cycle_pct - duty_min_pct) /
                    (duty_max_pct - duty_min_pct)};
    }

    ControllerParams denormalized(const std::array<double, 2>& u) const {
        return {wavelength_min_um +
                    u[0] * (wavelength_max_um - wavelength_min_um),
                duty_min_pct + u[1] * (duty_max_pct - duty_min_pct)};
    }

    void validate() const {
        if (!(wavelength_min_um < wavelength_max_um) ||
            !(duty_min_pct < duty_max_pct))
            throw DomainError("search box is empty or inverted");
    }

    friend bool operator==(const SearchBox&, const SearchBox&) = default;
};

/// Controller setting used to seed every optimization run.
inline ControllerParams initial_controller() { return {645.0, 30.0}; }

} // namespace gaitopt

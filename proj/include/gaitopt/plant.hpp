#pragma once

#include <cstdint>
#include <functional>

#include "gaitopt/params.hpp"
#include "gaitopt/velocity.hpp"

namespace gaitopt {

/// Synthetic microrobot: a ground-truth speed landscape plus the motion and
/// measurement model that turns a controller setting into a tracking trace.
///
/// x(t) = (V * BL / 100) * s(t) + a * sin(2*pi*f*t + phi0) + noise
/// s(t) = t - t0 * (1 - exp(-t / tau))   (start-up transient; s ~ t - t0 late)
struct PlantSpec {
    std::function<double(const ControllerParams&)> speed_map;     ///< %BL/s
    std::function<double(const ControllerParams&)> amplitude_map; ///< um
    double position_noise_um = 2.0;
    double bodylength_um = 300.0;
    double oscillation_hz = 1.0;
    double frame_rate_hz = 10.0;
    double transient_delay_s = 1.0; ///< t0
    double transient_tau_s = 1.0;   ///< tau
    SearchBox box;

    void validate() const;
};

/// Two-bump benchmark landscape: a broad optimum near (380 um, 43 %) at
/// about 2.24 %BL/s and a shallow shoulder near the starting point
/// (645 um, 30 %) at about 1.02 %BL/s.
PlantSpec default_plant();

/// Simulate a tracking trace of at least 4 s at the plant frame rate.
/// The oscillation phase is drawn once per trace; measurement noise is
/// drawn per sample. Deterministic given the seed.
TrackingTrace simulate_trace(const PlantSpec& spec, const ControllerParams& theta,
                             double duration_s, std::uint64_t seed);

struct PlantOptimum {
    ControllerParams theta;
    double speed = 0.0; ///< %BL/s
};

/// Locate the speed-map maximum over the plant's box (dense scan + local
/// refinement).
PlantOptimum plant_optimum(const PlantSpec& spec);

} // namespace gaitopt

#include "gaitopt/plant.hpp"

#include <cmath>

#include "gaitopt/acquisition.hpp"
#include "gaitopt/errors.hpp"
#include "gaitopt/rng.hpp"

namespace gaitopt {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double bump(double x, double center, double width) {
    const double z = (x - center) / width;
    return std::exp(-0.5 * z * z);
}
} // namespace

void PlantSpec::validate() const {
    if (!speed_map || !amplitude_map)
        throw DomainError("plant maps must be set");
    if (!(position_noise_um >= 0.0))
        throw DomainError("position noise must be non-negative");
    if (!(bodylength_um > 0.0)) throw DomainError("bodylength must be positive");
    if (!(oscillation_hz > 0.0))
        throw DomainError("oscillation frequency must be positive");
    if (!(frame_rate_hz > 0.0)) throw DomainError("frame rate must be positive");
    if (!(transient_delay_s >= 0.0))
        throw DomainError("transient delay must be non-negative");
    if (transient_delay_s > 0.0 && !(transient_tau_s > 0.0))
        throw DomainError("transient time constant must be positive");
    box.validate();
}

PlantSpec default_plant() {
    PlantSpec spec;
    spec.speed_map = [](const ControllerParams& p) {
        return 2.2 * bump(p.wavelength_um, 380.0, 120.0) *
                   bump(p.duty_cycle_pct, 43.0, 6.0) +
               1.0 * bump(p.wavelength_um, 645.0, 150.0) *
                   bump(p.duty_cycle_pct, 30.0, 7.0);
    };
    spec.amplitude_map = [](const ControllerParams& p) {
        return 0.3 + p.wavelength_um / 1000.0;
    };
    return spec;
}

TrackingTrace simulate_trace(const PlantSpec& spec, const ControllerParams& theta,
                             double duration_s, std::uint64_t seed) {
    spec.validate();
    if (!spec.box.contains(theta))
        throw DomainError("controller parameters outside the plant box");
    if (!(duration_s >= 4.0))
        throw DomainError("trace duration must be at least 4 s");

    const double v = spec.speed_map(theta);          // %BL/s
    const double slope = v * spec.bodylength_um / 100.0; // um/s
    const double a = spec.amplitude_map(theta);      // um

    RandomStream rng(seed);
    const double phi0 = kTwoPi * rng.uniform01();

    TrackingTrace trace;
    trace.frame_rate_hz = spec.frame_rate_hz;
    trace.bodylength_um = spec.bodylength_um;
    const int n = static_cast<int>(std::floor(duration_s * spec.frame_rate_hz)) + 1;
    trace.samples.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / spec.frame_rate_hz;
        double s = t;
        if (spec.transient_delay_s > 0.0)
            s -= spec.transient_delay_s * (1.0 - std::exp(-t / spec.transient_tau_s));
        // Draw noise unconditionally so the stream advances identically
        // whether or not noise is enabled.
        const double eps = spec.position_noise_um * rng.normal();
        const double x = slope * s + a * std::sin(kTwoPi * spec.oscillation_hz * t + phi0) + eps;
        trace.samples.push_back({t, x});
    }
    return trace;
}

PlantOptimum plant_optimum(const PlantSpec& spec) {
    spec.validate();
    MaximizeResult best = maximize_on_box(spec.speed_map, spec.box, 401, 301);
    return {best.params, best.value};
}

} // namespace gaitopt

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace gaitopt {

struct TraceSample {
    double t_s = 0.0;
    double x_um = 0.0;
};

/// 1-D tracked position of a microrobot (pre-extracted upstream).
struct TrackingTrace {
    std::vector<TraceSample> samples;
    double frame_rate_hz = 10.0;
    double bodylength_um = 300.0;

    void validate() const; ///< strictly increasing t, positive metadata
};

/// Movement-model fit x(t) = V t + b + a sin(2 pi f t + phi).
struct FitResult {
    double v_m = 0.0;            ///< speed, %BL/s: 100 * slope / bodylength
    double offset_b_um = 0.0;
    double amplitude_a_um = 0.0; ///< >= 0
    double phase_phi_rad = 0.0;  ///< in [-pi, pi)
    double residual_rms_um = 0.0;
    /// Least-squares covariance of (slope um/s, b, c1, c2); kept as
    /// metadata, not propagated downstream.
    Eigen::Matrix4d param_cov = Eigen::Matrix4d::Zero();
};

/// Exact linear least squares after the reparameterization
/// a sin(2 pi f t + phi) = c1 sin(2 pi f t) + c2 cos(2 pi f t).
/// Samples before t_cut are discarded; at least 5 samples spanning two full
/// oscillation periods must remain.
FitResult fit_movement(const TrackingTrace& trace, double f_hz = 1.0,
                       double t_cut = 2.0);

/// Cost of a measured speed against the desired speed: |v_star - v_m|.
double cost_from_speed(double v_m, double v_star);

/// CSV trace format: optional `# key = value` metadata lines
/// (bodylength_um, frame_rate_hz), then a `t_s,x_um` header and data rows.
TrackingTrace load_trace_csv(const std::string& path);
void write_trace_csv(const std::string& path, const TrackingTrace& trace);

} // namespace gaitopt

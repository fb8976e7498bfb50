#pragma once

// Step-response characterization: time-constant, droop-slope and ramp-rate
// estimators, and the experiment set that applies them to the model.

#include "droopkit/plant.hpp"
#include "droopkit/simcore.hpp"

#include <span>
#include <vector>

namespace droopkit {

struct StepFit {
    double t_step = 0.0;
    double y0 = 0.0;
    double y_inf = 0.0;
    double tau = 0.0;
    /// 1/tau, the convention used when quoting loop bandwidths from steps.
    double bw_paper = 0.0;
    /// 1/(2 pi tau), the first-order pole frequency.
    double bw_standard = 0.0;
    /// RMS residual of the least-squares exponential over the settle window.
    double rms_residual = 0.0;
    /// Time constant of that least-squares exponential.
    double tau_refined = 0.0;
};

/// Single-crossing estimator: y0 is the mean of the 10 samples before
/// t_step, y_inf the mean of the last quarter of the settle window, tau the
/// interpolated time at which y reaches y0 + (1 - 1/e)(y_inf - y0), measured
/// from t_step. Samples may be irregularly spaced.
StepFit fit_time_constant(std::span<const double> t, std::span<const double> y, double t_step,
                          double settle_window, double noise_floor = 1e-6);

struct DroopPoint {
    double x = 0.0;  ///< W (VP) or A (VI)
    double v = 0.0;
};

struct DroopFit {
    double slope = 0.0;  ///< positive for drooping data
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares on v = intercept - slope * x.
DroopFit fit_droop_slope(std::span<const DroopPoint> points);

/// Least-squares slope of v(t) over samples with t in [t_start, t_end].
double fit_ramp_rate(std::span<const double> t, std::span<const double> v, double t_start,
                     double t_end);

namespace experiments {

/// Current-reference step with the voltage loop open. The initial load is
/// chosen so the converter already carries i_from in steady state.
Scenario current_step(const ConverterParams& params, double i_from = 5.0, double i_to = 10.0,
                      double t_step = 1e-3, double settle = 0.5e-3);

/// Droop switched on at t_step under a constant-power load.
Scenario droop_enable(const ConverterParams& params, double p_load, double coefficient,
                      double t_step = 0.05, double settle = 0.05);

/// Droop switched on at t = 0.02 s; run long enough to settle.
Scenario droop_steady(const ConverterParams& params, double p_load, double coefficient);

/// Steady drooped operation, then the no-load reference is raised by `lift`.
Scenario reference_restore(const ConverterParams& params, double p_load, double coefficient,
                           double lift, double t_cmd = 0.05);

}  // namespace experiments

struct CharacterizationReport {
    StepFit current_loop;
    StepFit droop_lpf;
    std::vector<DroopPoint> droop_sweep;
    DroopFit droop;
    double ramp_rate = 0.0;
    double restore_time = 0.0;
};

/// Runs the four characterization experiments on the model and fits them.
CharacterizationReport characterize_model(const ConverterParams& params);

/// Time from t_from until `signal` first comes within tol of its final value.
double settle_time(std::span<const double> t, std::span<const double> signal, double t_from,
                   double tol);

/// Mean of `signal` over samples with t in [t_lo, t_hi].
double window_mean(std::span<const double> t, std::span<const double> signal, double t_lo,
                   double t_hi);

}  // namespace droopkit

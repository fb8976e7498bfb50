#pragma once

// Reduced-order stability of a droop-controlled source feeding a
// constant-power load through line inductance L onto bus capacitance C:
//   stable  <=>  C > L / (K Re)  <=>  L < K C Re
// with K the droop resistance and Re = v^2 / p the CPL impedance magnitude.

#include "droopkit/plant.hpp"
#include "droopkit/simcore.hpp"

#include <optional>
#include <span>

namespace droopkit {

/// v^2 / p; +infinity at p = 0.
double equivalent_cpl_impedance(double v, double p);

/// L / (K Re)
double min_capacitance(double l, double k, double re);

/// K C Re
double max_inductance(double k, double c, double re);

/// Linear VP droop law v(p) = v_nl - k_vp p.
struct DroopLaw {
    double v_nl = 350.0;
    double k_vp = 0.0;

    double voltage(double p) const noexcept { return v_nl - k_vp * p; }
    /// Power at which v(p) falls to half of v_nl; +infinity without droop.
    double half_voltage_power() const noexcept;
};

struct InstabilityPrediction {
    /// Smallest power at which C = L / (K Re(p)); nullopt when none exists
    /// below p_upper.
    std::optional<double> p_crit;
    double p_upper = 0.0;
};

/// Bisection on p in (0, p_upper]. p_upper defaults to the half-voltage
/// power of the droop law (or a large bracket when k_vp = 0).
InstabilityPrediction predict_instability_power(const DroopLaw& law, double l, double c, double k,
                                                std::optional<double> p_upper = std::nullopt);
InstabilityPrediction predict_instability_power(const ConverterParams& params, double l, double c,
                                                double k);

struct StabilityAssessment {
    double p = 0.0;       ///< load power the assessment was made at
    double v = 0.0;       ///< drooped bus voltage at p
    double re = 0.0;
    double c_min = 0.0;
    double l_max = 0.0;
    bool stable = false;
    double margin = 0.0;  ///< C / c_min
    std::optional<double> p_crit;
};

StabilityAssessment assess_stability(const ConverterParams& params, double l, double c, double k,
                                     double p);

struct OscillationOptions {
    double window = 0.05;           ///< s
    double threshold_frac = 0.02;   ///< peak-to-peak as a fraction of nominal
    double nominal = 350.0;         ///< V
};

/// Sliding-window peak-to-peak detector on a ramp-suppressed signal. Returns
/// the onset time or nullopt. f_lo bounds the window from below (at least
/// one period); f_hi must stay under the Nyquist rate of the samples.
std::optional<double> detect_oscillation(std::span<const double> t, std::span<const double> v,
                                         double f_lo, double f_hi, const OscillationOptions& opt = {});
std::optional<double> detect_oscillation(const SimTrace& trace, double f_lo, double f_hi,
                                         const OscillationOptions& opt = {});

}  // namespace droopkit

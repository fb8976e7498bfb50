#pragma once

// Equivalent boost-converter model: parameter set, averaged steady state and
// the two small-signal plants used for loop design.

#include "droopkit/errors.hpp"
#include "droopkit/transfer_function.hpp"

#include <string>
#include <vector>

namespace droopkit {

/// Physical and control parameters of the equivalent boost converter.
/// Defaults describe the reference 350 V boost converter.
struct ConverterParams {
    double v_nl = 350.0;         ///< global no-load voltage reference [V]
    double e_src = 130.0;        ///< source voltage [V]
    double r_bat = 0.03;         ///< source resistance [ohm]
    double l_ind = 2e-3;         ///< boost inductance [H]
    double r_esr = 0.01;         ///< inductor ESR [ohm]
    double c_out = 3.3e-3;       ///< output capacitance [F]
    double k_vp = 10.0 / 3600.0; ///< VP droop coefficient [V/W]
    double k_vi = 1.0;           ///< equivalent VI droop resistance [ohm]
    double f_i = 20e3;           ///< current-loop bandwidth [Hz]
    double f_v = 200.0;          ///< voltage-loop bandwidth [Hz]
    double f_lpf = 200.0;        ///< droop low-pass bandwidth [Hz]
    double ramp = 50.0;          ///< reference ramp rate [V/s]
    double f_sw = 30e3;          ///< switching frequency [Hz]

    double r_series() const noexcept { return r_esr + r_bat; }

    friend bool operator==(const ConverterParams&, const ConverterParams&) = default;
};

/// Returns one entry per violated invariant (empty when valid).
std::vector<ValidationIssue> validate(const ConverterParams& p);

struct OperatingPoint {
    double duty = 0.0;
    double i_l = 0.0;
    double v_out = 0.0;
    double p_out = 0.0;
    /// v_out^2 / p_out; +infinity at no load.
    double r_load = 0.0;
};

/// Averaged steady state of the boost stage:
///   (1 - D) v_out = e_src - i_l (r_esr + r_bat)
///   (1 - D) i_l   = p_out / v_out
/// Newton iteration on i_l, low-current root. Throws InfeasibleOperatingPoint
/// when the source cannot deliver p_out.
OperatingPoint solve_operating_point(const ConverterParams& params, double v_out, double p_out);

/// Inductor-current-to-duty plant:
///   ((1-D) Vo - s L IL) / (L C s^2 + (L/R) s + (1-D)^2)
/// with R the load resistance at the operating point.
TransferFunction gid(const ConverterParams& params, const OperatingPoint& op);

/// Output-voltage-to-inductor-current plant:
///   ((1-D) Vo - s L IL) / (Vo C s + 2 (1-D) IL)
TransferFunction gvi(const ConverterParams& params, const OperatingPoint& op);

/// Duty-to-inductor-current dynamics of the averaged model with the output
/// voltage held: v_nl / (L s + r_esr + r_bat). Used to synthesize the
/// time-domain current controller.
TransferFunction averaged_current_plant(const ConverterParams& params);

}  // namespace droopkit

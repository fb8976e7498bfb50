#pragma once

#include "droopkit/plant.hpp"
#include "droopkit/transfer_function.hpp"

#include <string>
#include <vector>

namespace droopkit {

/// Controller direction. A reverse-acting controller drives its output
/// opposite to the error, which is what a plant with negative gain at the
/// crossover needs.
enum class Direction { direct, reverse };

struct PiGains {
    double kp = 1.0;
    double ki = 0.0;
    Direction direction = Direction::direct;

    /// Throws std::invalid_argument unless kp > 0 and ki >= 0.
    PiGains(double kp_, double ki_, Direction direction_ = Direction::direct);
    PiGains() = default;

    double sign() const noexcept { return direction == Direction::direct ? 1.0 : -1.0; }

    friend bool operator==(const PiGains&, const PiGains&) = default;
};

/// sign * (kp s + ki) / s
TransferFunction pi_tf(const PiGains& g);

struct TuneReport {
    PiGains gains;
    LoopMargins achieved;
    double target_f = 0.0;
    double target_pm = 0.0;
    /// True when both crossover and phase-margin targets are met exactly.
    bool exact = false;
};

/// Synthesizes PI gains so pi_tf(g) * plant crosses unity at f_c with
/// phase margin pm_target. The two real conditions are linear in (kp, ki),
/// so the solve is direct. When no sign-consistent solution exists the PI
/// zero is placed a decade below f_c and kp is set for unity gain at f_c.
TuneReport tune_pi(const TransferFunction& plant, double f_c, double pm_target);

/// Tc = Gid Gc
TransferFunction loop_gain_current(const TransferFunction& plant_gid, const PiGains& gc);

/// Tv = Gvi Gv Tci
TransferFunction loop_gain_voltage(const TransferFunction& gvi, const PiGains& gv,
                                   const TransferFunction& tci);

struct HierarchyCheck {
    std::string lower_name;
    double lower = 0.0;
    std::string upper_name;
    double upper = 0.0;
    bool strict = true;
    bool passed = false;
};

struct HierarchyAudit {
    std::vector<HierarchyCheck> checks;  // ordered slow to fast
    bool passed() const noexcept;
};

/// f_lpf <= f_v < f_i < f_sw
HierarchyAudit check_hierarchy(const ConverterParams& params);

/// Current and voltage loop designs at one operating point.
struct LoopDesign {
    OperatingPoint op;
    TransferFunction plant_current = TransferFunction::unity();
    TransferFunction plant_voltage = TransferFunction::unity();
    TuneReport current;
    TuneReport voltage;
    TransferFunction tc = TransferFunction::unity();
    TransferFunction tci = TransferFunction::unity();
    TransferFunction tv = TransferFunction::unity();
};

inline constexpr double kCurrentLoopPm = 90.0;
inline constexpr double kVoltageLoopPm = 45.0;
inline constexpr double kDesignPower = 3600.0;

/// Tunes the current loop on gid at f_i, closes it, then tunes the voltage
/// loop on gvi * tci at f_v.
LoopDesign design_loops(const ConverterParams& params, double p_out = kDesignPower,
                        double pm_current = kCurrentLoopPm, double pm_voltage = kVoltageLoopPm);

}  // namespace droopkit

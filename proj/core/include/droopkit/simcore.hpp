#pragma once

// Fixed-step time-domain model of the averaged boost converter under
// dual-loop PI control with ramp-limited reference and low-pass filtered
// droop, feeding an optional L/C line and a constant-power load.

#include "droopkit/errors.hpp"
#include "droopkit/looptune.hpp"
#include "droopkit/plant.hpp"

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace droopkit {

enum class DroopMode { none, vp, vi };

std::string_view to_string(DroopMode mode);
std::optional<DroopMode> parse_droop_mode(std::string_view text);

/// Moves prev toward target by at most rate*dt, landing exactly on target.
double ramp_step(double prev, double target, double rate, double dt);

/// Exact zero-order-hold discretization of a first-order lag with time
/// constant 1/f_lpf (bandwidth taken as 1/tau).
double lpf_step(double state, double input, double f_lpf, double dt);

/// Voltage drop commanded by the droop law: k*p (VP), k*i (VI) or 0.
double droop_drop(DroopMode mode, double coefficient, double p_out, double i_out);

/// Constant-power load current with a resistive crossover below v_min so the
/// model stays finite through deep voltage collapse.
double cpl_current(double v_bus, double p, double v_min);

struct NetworkParams {
    double l_line = 0.0;
    double r_line = 0.0;
    double c_bus = 0.0;

    bool collapsed() const noexcept { return l_line == 0.0 && c_bus == 0.0; }
    friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

struct NetworkState {
    double i_l = 0.0;
    double v_c = 0.0;
    double i_line = 0.0;
    double v_bus = 0.0;
};

struct ControlState {
    double v_ref_cmd = 0.0;
    double v_ref_ramped = 0.0;
    double droop_lpf = 0.0;
    double int_v = 0.0;
    double int_i = 0.0;
    DroopMode droop_mode = DroopMode::none;
    double droop_coef = 0.0;
    /// Mode restored by an enable_droop event.
    DroopMode parked_mode = DroopMode::none;
    /// When set, the voltage loop is bypassed and this is the current reference.
    std::optional<double> i_ref_override;
};

struct ControllerGains {
    PiGains current;
    PiGains voltage;
    double i_max = 60.0;
    double duty_max = 0.98;
};

/// Gains for the time-domain model. The current loop is tuned on the
/// averaged duty-to-current dynamics so its closed loop is first order with
/// tau = 1/f_i; the voltage loop is tuned at f_v on gvi in series with that
/// closed current loop.
struct ControllerDesign {
    ControllerGains gains;
    TuneReport current;
    TuneReport voltage;
};
ControllerDesign design_controller(const ConverterParams& params, double design_power = kDesignPower,
                                   double pm_voltage = kVoltageLoopPm, double i_max = 60.0);

struct ControllerInput {
    NetworkState net;
    double i_out = 0.0;  ///< current leaving the converter output node
};

struct ControllerOutput {
    double duty = 0.0;
    double i_ref = 0.0;
    double v_ref_eff = 0.0;
};

/// One controller update. Integrators use conditional integration: they
/// hold while the output sits on a clamp and the error pushes further in.
ControllerOutput controller_step(ControlState& ctl, const ControllerInput& meas,
                                 const ControllerGains& gains, const ConverterParams& params,
                                 double dt);

namespace action {
struct SetLoadPower {
    double p;
    friend bool operator==(const SetLoadPower&, const SetLoadPower&) = default;
};
struct RampLoadPower {
    double target;
    double rate;
    /// Optional staircase quantization of the ramp in W (0 = continuous).
    double step = 0.0;
    friend bool operator==(const RampLoadPower&, const RampLoadPower&) = default;
};
struct SetDroop {
    DroopMode mode;
    double coefficient;
    friend bool operator==(const SetDroop&, const SetDroop&) = default;
};
struct SetVref {
    double v;
    friend bool operator==(const SetVref&, const SetVref&) = default;
};
struct EnableDroop {
    friend bool operator==(const EnableDroop&, const EnableDroop&) = default;
};
struct DisableDroop {
    friend bool operator==(const DisableDroop&, const DisableDroop&) = default;
};
/// Opens the voltage loop and drives the current loop directly.
struct SetCurrentRef {
    double i;
    friend bool operator==(const SetCurrentRef&, const SetCurrentRef&) = default;
};
/// Closes the voltage loop again.
struct ReleaseCurrentRef {
    friend bool operator==(const ReleaseCurrentRef&, const ReleaseCurrentRef&) = default;
};
}  // namespace action

using EventAction = std::variant<action::SetLoadPower, action::RampLoadPower, action::SetDroop,
                                 action::SetVref, action::EnableDroop, action::DisableDroop,
                                 action::SetCurrentRef, action::ReleaseCurrentRef>;

struct Event {
    double t = 0.0;
    EventAction action;

    friend bool operator==(const Event&, const Event&) = default;
};

struct Scenario {
    ConverterParams params;
    NetworkParams network;
    double dt = 1e-6;
    double t_end = 1.0;
    int decimation = 100;
    /// Initial constant-power load [W].
    double p_load = 0.0;
    /// Initial no-load reference; defaults to params.v_nl.
    std::optional<double> v_ref;
    DroopMode droop_mode = DroopMode::none;
    double droop_coef = 0.0;
    double i_max = 60.0;
    double v_min = 50.0;
    double design_power = kDesignPower;
    double pm_voltage = kVoltageLoopPm;
    std::vector<Event> events;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// One entry per violated scenario invariant (converter checks included).
std::vector<ValidationIssue> validate(const Scenario& s);

struct Annotation {
    double t = 0.0;
    std::string message;
};

struct SimTrace {
    std::vector<double> t, v_bus, v_c, i_l, i_line, p_load, duty, v_ref_eff;
    /// Ramp-limiter output; kept in memory for checks, not exported.
    std::vector<double> v_ref_ramped;
    std::vector<Annotation> annotations;
    double sample_dt = 0.0;

    std::size_t size() const noexcept { return t.size(); }
    /// Looks up a column by its CSV header name; throws std::out_of_range.
    std::span<const double> column(std::string_view name) const;
};

inline constexpr std::string_view kTraceHeader = "t,v_bus,v_c,i_l,i_line,p_load,duty,v_ref_eff";

class SimulationDiverged : public Error {
public:
    SimulationDiverged(double t, SimTrace partial);
    double time() const noexcept { return t_; }
    const SimTrace& partial_trace() const noexcept { return partial_; }

private:
    double t_;
    SimTrace partial_;
};

/// Steady-state initial condition consistent with the scenario's initial
/// load, reference and droop setting.
struct InitialState {
    NetworkState net;
    ControlState ctl;
};
InitialState initial_state(const Scenario& s);

/// Integrates the scenario with classical RK4 at fixed step. Throws
/// SimulationDiverged (carrying the partial trace) on a non-finite state.
SimTrace run_scenario(const Scenario& scenario);

}  // namespace droopkit

#include "droopkit/simcore.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace droopkit {

std::string_view to_string(DroopMode mode) {
    switch (mode) {
        case DroopMode::none: return "none";
        case DroopMode::vp: return "vp";
        case DroopMode::vi: return "vi";
    }
    return "none";
}

std::optional<DroopMode> parse_droop_mode(std::string_view text) {
    if (text == "none") return DroopMode::none;
    if (text == "vp" || text == "VP") return DroopMode::vp;
    if (text == "vi" || text == "VI") return DroopMode::vi;
    return std::nullopt;
}

double ramp_step(double prev, double target, double rate, double dt) {
    const double max_delta = rate * dt;
    const double delta = target - prev;
    if (std::abs(delta) <= max_delta) return target;
    return prev + std::copysign(max_delta, delta);
}

double lpf_step(double state, double input, double f_lpf, double dt) {
    const double tau = 1.0 / f_lpf;
    return state + (input - state) * -std::expm1(-dt / tau);
}

double droop_drop(DroopMode mode, double coefficient, double p_out, double i_out) {
    switch (mode) {
        case DroopMode::vp: return coefficient * p_out;
        case DroopMode::vi: return coefficient * i_out;
        case DroopMode::none: return 0.0;
    }
    return 0.0;
}

double cpl_current(double v_bus, double p, double v_min) {
    if (p == 0.0) return 0.0;
    if (v_bus >= v_min) return p / v_bus;
    return p * v_bus / (v_min * v_min);
}

ControllerDesign design_controller(const ConverterParams& params, double design_power,
                                   double pm_voltage, double i_max) {
    ControllerDesign d;
    // Closed current loop 1/(1 + s tau) with tau = 1/f_i needs a crossover of
    // f_i rad/s.
    const auto plant_i = averaged_current_plant(params);
    d.current = tune_pi(plant_i, params.f_i / (2.0 * std::numbers::pi), 90.0);
    const auto tci = close_unity_feedback(series(pi_tf(d.current.gains), plant_i));

    const auto op = solve_operating_point(params, params.v_nl, design_power);
    d.voltage = tune_pi(series(gvi(params, op), tci), params.f_v, pm_voltage);
    d.gains = ControllerGains{d.current.gains, d.voltage.gains, i_max, 0.98};
    return d;
}

namespace {

struct PiResult {
    double out;
    double integ;
};

PiResult pi_update(double err, double integ, const PiGains& g, double lo, double hi, double dt) {
    const double e = g.sign() * err;
    const double raw = g.kp * e + integ;
    const double out = std::clamp(raw, lo, hi);
    const bool pushing_high = raw > hi && e > 0.0;
    const bool pushing_low = raw < lo && e < 0.0;
    if (!pushing_high && !pushing_low) integ += g.ki * e * dt;
    return {out, integ};
}

}  // namespace

ControllerOutput controller_step(ControlState& ctl, const ControllerInput& meas,
                                 const ControllerGains& gains, const ConverterParams& params,
                                 double dt) {
    ctl.v_ref_ramped = ramp_step(ctl.v_ref_ramped, ctl.v_ref_cmd, params.ramp, dt);
    const double p_out = meas.net.v_c * meas.i_out;
    const double drop = droop_drop(ctl.droop_mode, ctl.droop_coef, p_out, meas.i_out);
    ctl.droop_lpf = lpf_step(ctl.droop_lpf, drop, params.f_lpf, dt);

    ControllerOutput out;
    out.v_ref_eff = ctl.v_ref_ramped - ctl.droop_lpf;

    if (ctl.i_ref_override) {
        out.i_ref = *ctl.i_ref_override;
    } else {
        const auto v = pi_update(out.v_ref_eff - meas.net.v_c, ctl.int_v, gains.voltage, -gains.i_max,
                                 gains.i_max, dt);
        out.i_ref = v.out;
        ctl.int_v = v.integ;
    }
    const auto c = pi_update(out.i_ref - meas.net.i_l, ctl.int_i, gains.current, 0.0, gains.duty_max, dt);
    ctl.int_i = c.integ;
    out.duty = c.out;
    return out;
}

std::span<const double> SimTrace::column(std::string_view name) const {
    if (name == "t") return t;
    if (name == "v_bus") return v_bus;
    if (name == "v_c") return v_c;
    if (name == "i_l") return i_l;
    if (name == "i_line") return i_line;
    if (name == "p_load") return p_load;
    if (name == "duty") return duty;
    if (name == "v_ref_eff") return v_ref_eff;
    if (name == "v_ref_ramped") return v_ref_ramped;
    throw std::out_of_range("unknown trace column: " + std::string(name));
}

SimulationDiverged::SimulationDiverged(double t, SimTrace partial)
    : Error([&] {
          std::ostringstream os;
          os << "simulation diverged at t = " << t << " s";
          return os.str();
      }()),
      t_(t),
      partial_(std::move(partial)) {}

std::vector<ValidationIssue> validate(const Scenario& s) {
    auto out = validate(s.params);
    auto require = [&](bool ok, std::string key, const char* msg) {
        if (!ok) out.push_back({std::move(key), msg});
    };
    require(s.dt > 0.0, "dt", "dt must be positive");
    if (s.params.f_i > 0.0)
        require(s.dt <= 1.0 / (20.0 * s.params.f_i) * (1.0 + 1e-12), "dt", "dt must not exceed 1/(20 f_i)");
    require(s.t_end > 0.0, "t_end", "t_end must be positive");
    require(s.decimation >= 1, "decimation", "decimation must be at least 1");
    require(s.p_load >= 0.0, "p_load", "initial load power must be non-negative");
    require(!s.v_ref || *s.v_ref > s.params.e_src, "v_ref", "v_ref must exceed e_src");
    require(s.droop_coef >= 0.0, "droop_coef", "droop coefficient must be non-negative");
    require(s.i_max > 0.0, "i_max", "i_max must be positive");
    require(s.v_min > 0.0, "v_min", "v_min must be positive");
    require(s.design_power >= 0.0, "design_power", "design_power must be non-negative");
    require(s.pm_voltage > 0.0 && s.pm_voltage < 180.0, "pm_voltage", "pm_voltage must lie in (0, 180)");

    const auto& n = s.network;
    require(n.l_line >= 0.0, "l_line", "l_line must be non-negative");
    require(n.r_line >= 0.0, "r_line", "r_line must be non-negative");
    require(n.c_bus >= 0.0, "c_bus", "c_bus must be non-negative");
    if (n.collapsed()) {
        require(n.r_line == 0.0, "r_line", "r_line requires a bus capacitance (c_bus > 0)");
    } else {
        require(n.c_bus > 0.0, "c_bus", "a line inductance needs a bus capacitance (c_bus > 0)");
        if (n.l_line == 0.0) require(n.r_line > 0.0, "r_line", "c_bus without l_line needs r_line > 0");
    }

    for (std::size_t i = 0; i < s.events.size(); ++i) {
        const auto& ev = s.events[i];
        const std::string key = "events[" + std::to_string(i) + "]";
        require(ev.t >= 0.0, key, "event times must be non-negative");
        if (i > 0) require(s.events[i - 1].t <= ev.t, key, "events must be sorted by time");
        std::visit(
            [&](const auto& a) {
                using A = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<A, action::SetLoadPower>) {
                    require(a.p >= 0.0, key, "set_load_power: p must be non-negative");
                } else if constexpr (std::is_same_v<A, action::RampLoadPower>) {
                    require(a.target >= 0.0, key, "ramp_load_power: target must be non-negative");
                    require(a.rate > 0.0, key, "ramp_load_power: rate must be positive");
                    require(a.step >= 0.0, key, "ramp_load_power: step must be non-negative");
                } else if constexpr (std::is_same_v<A, action::SetDroop>) {
                    require(a.coefficient >= 0.0, key, "set_droop: coefficient must be non-negative");
                } else if constexpr (std::is_same_v<A, action::SetVref>) {
                    require(a.v > s.params.e_src, key, "set_vref: v must exceed e_src");
                }
            },
            ev.action);
    }
    return out;
}

namespace {

using State = std::array<double, 4>;  // i_l, v_c, i_line, v_bus

enum class Topology { direct, line, resistive_link };

Topology topology_of(const NetworkParams& n) {
    if (n.collapsed()) return Topology::direct;
    return n.l_line > 0.0 ? Topology::line : Topology::resistive_link;
}

struct LoadProfile {
    double base = 0.0;
    double t0 = 0.0;
    double target = 0.0;
    double rate = 0.0;
    double step = 0.0;
    bool ramping = false;

    double at(double t) const {
        if (!ramping) return base;
        double moved = rate * std::max(0.0, t - t0);
        if (step > 0.0) moved = std::floor(moved / step) * step;
        const double span = std::abs(target - base);
        return moved >= span ? target : base + std::copysign(moved, target - base);
    }
};

struct Model {
    const ConverterParams& p;
    const NetworkParams& n;
    Topology topo;
    double v_min;

    double output_current(const State& x, double load) const {
        switch (topo) {
            case Topology::direct: return cpl_current(x[1], load, v_min);
            case Topology::line: return x[2];
            case Topology::resistive_link: return (x[1] - x[3]) / n.r_line;
        }
        return 0.0;
    }

    State deriv(const State& x, double duty, double load) const {
        const double u = 1.0 - duty;
        const double i_out = output_current(x, load);
        State dx{};
        dx[0] = (p.e_src - x[0] * p.r_series() - u * x[1]) / p.l_ind;
        dx[1] = (u * x[0] - i_out) / p.c_out;
        if (topo == Topology::line) {
            dx[2] = (x[1] - n.r_line * x[2] - x[3]) / n.l_line;
            dx[3] = (x[2] - cpl_current(x[3], load, v_min)) / n.c_bus;
        } else if (topo == Topology::resistive_link) {
            dx[3] = (i_out - cpl_current(x[3], load, v_min)) / n.c_bus;
        }
        return dx;
    }

    NetworkState observe(const State& x, double load) const {
        NetworkState ns{x[0], x[1], x[2], x[3]};
        if (topo == Topology::direct) {
            ns.v_bus = x[1];
            ns.i_line = cpl_current(x[1], load, v_min);
        } else if (topo == Topology::resistive_link) {
            ns.i_line = output_current(x, load);
        }
        return ns;
    }
};

State axpy(const State& x, double h, const State& k) {
    State out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + h * k[i];
    return out;
}

bool finite(const State& x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

// Steady-state load-side current for a given converter voltage.
double steady_output_current(const NetworkParams& n, double v_c, double p, double v_min) {
    if (n.collapsed() || n.r_line == 0.0) return cpl_current(v_c, p, v_min);
    // r i^2 - v_c i + p = 0, low root, when the bus stays above v_min.
    const double disc = v_c * v_c - 4.0 * n.r_line * p;
    if (disc >= 0.0) {
        const double i = 2.0 * p / (v_c + std::sqrt(disc));
        if (v_c - n.r_line * i >= v_min) return i;
    }
    // Resistive region: i = p (v_c - r i) / v_min^2.
    const double g = p / (v_min * v_min);
    return g * v_c / (1.0 + g * n.r_line);
}

}  // namespace

InitialState initial_state(const Scenario& s) {
    const double v_ref = s.v_ref.value_or(s.params.v_nl);
    double v_c = v_ref;
    double i_out = 0.0;
    double drop = 0.0;
    for (int it = 0; it < 200; ++it) {
        i_out = steady_output_current(s.network, v_c, s.p_load, s.v_min);
        drop = droop_drop(s.droop_mode, s.droop_coef, v_c * i_out, i_out);
        const double next = v_ref - drop;
        if (std::abs(next - v_c) <= 1e-14 * v_ref) {
            v_c = next;
            break;
        }
        v_c = next;
    }
    i_out = steady_output_current(s.network, v_c, s.p_load, s.v_min);
    drop = droop_drop(s.droop_mode, s.droop_coef, v_c * i_out, i_out);
    const auto op = solve_operating_point(s.params, v_c, v_c * i_out);

    InitialState init;
    init.net.i_l = op.i_l;
    init.net.v_c = v_c;
    init.net.i_line = i_out;
    init.net.v_bus = v_c - s.network.r_line * i_out;
    init.ctl.v_ref_cmd = v_ref;
    init.ctl.v_ref_ramped = v_ref;
    init.ctl.droop_lpf = drop;
    init.ctl.droop_mode = s.droop_mode;
    init.ctl.parked_mode = s.droop_mode;
    init.ctl.droop_coef = s.droop_coef;
    init.ctl.int_v = op.i_l;
    init.ctl.int_i = op.duty;
    return init;
}

SimTrace run_scenario(const Scenario& sc) {
    if (auto problems = validate(sc); !problems.empty()) {
        std::string msg = "invalid scenario:";
        for (const auto& p : problems) msg += " " + p.message + ";";
        throw std::invalid_argument(msg);
    }
    const auto design = design_controller(sc.params, sc.design_power, sc.pm_voltage, sc.i_max);
    const auto& gains = design.gains;
    const Model model{sc.params, sc.network, topology_of(sc.network), sc.v_min};

    auto init = initial_state(sc);
    State x{init.net.i_l, init.net.v_c, init.net.i_line, init.net.v_bus};
    ControlState ctl = init.ctl;
    LoadProfile load{sc.p_load};

    const double dt = sc.dt;
    const auto n_steps = static_cast<long long>(std::llround(sc.t_end / dt));
    const auto dec = static_cast<long long>(sc.decimation);

    SimTrace tr;
    tr.sample_dt = dt * static_cast<double>(dec);
    const auto n_samples = static_cast<std::size_t>(n_steps / dec + 1);
    for (auto* col : {&tr.t, &tr.v_bus, &tr.v_c, &tr.i_l, &tr.i_line, &tr.p_load, &tr.duty,
                      &tr.v_ref_eff, &tr.v_ref_ramped})
        col->reserve(n_samples);

    // Protective-trip watch: 10 ms blocks of v_bus peak-to-peak.
    const long long block_steps = std::max(1LL, std::llround(0.01 / dt));
    const double trip_pp = 0.2 * sc.params.v_nl;
    double blk_min = 0.0, blk_max = 0.0;
    int blocks_over = 0;
    bool tripped = false;

    std::size_t next_event = 0;
    for (long long n = 0; n <= n_steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        while (next_event < sc.events.size() && sc.events[next_event].t <= t + 0.5 * dt) {
            std::visit(
                [&](const auto& a) {
                    using A = std::decay_t<decltype(a)>;
                    if constexpr (std::is_same_v<A, action::SetLoadPower>) {
                        load = LoadProfile{a.p};
                    } else if constexpr (std::is_same_v<A, action::RampLoadPower>) {
                        load = LoadProfile{load.at(t), t, a.target, a.rate, a.step, true};
                    } else if constexpr (std::is_same_v<A, action::SetDroop>) {
                        ctl.droop_mode = a.mode;
                        ctl.parked_mode = a.mode;
                        ctl.droop_coef = a.coefficient;
                    } else if constexpr (std::is_same_v<A, action::SetVref>) {
                        ctl.v_ref_cmd = a.v;
                    } else if constexpr (std::is_same_v<A, action::EnableDroop>) {
                        ctl.droop_mode = ctl.parked_mode;
                    } else if constexpr (std::is_same_v<A, action::DisableDroop>) {
                        if (ctl.droop_mode != DroopMode::none) ctl.parked_mode = ctl.droop_mode;
                        ctl.droop_mode = DroopMode::none;
                    } else if constexpr (std::is_same_v<A, action::SetCurrentRef>) {
                        ctl.i_ref_override = a.i;
                    } else if constexpr (std::is_same_v<A, action::ReleaseCurrentRef>) {
                        ctl.i_ref_override.reset();
                    }
                },
                sc.events[next_event].action);
            ++next_event;
        }

        const double p_now = load.at(t);
        const auto meas_net = model.observe(x, p_now);
        const ControllerInput meas{meas_net, model.output_current(x, p_now)};
        const auto u = controller_step(ctl, meas, gains, sc.params, dt);

        if (n % dec == 0) {
            tr.t.push_back(t);
            tr.v_bus.push_back(meas_net.v_bus);
            tr.v_c.push_back(meas_net.v_c);
            tr.i_l.push_back(meas_net.i_l);
            tr.i_line.push_back(meas_net.i_line);
            tr.p_load.push_back(p_now);
            tr.duty.push_back(u.duty);
            tr.v_ref_eff.push_back(u.v_ref_eff);
            tr.v_ref_ramped.push_back(ctl.v_ref_ramped);
        }

        if (!tripped) {
            if (n % block_steps == 0) {
                if (n > 0) {
                    blocks_over = (blk_max - blk_min > trip_pp) ? blocks_over + 1 : 0;
                    if (blocks_over * 0.01 >= 0.2 - 1e-12) {
                        tr.annotations.push_back(
                            {t, "protective trip: v_bus peak-to-peak above 20% of nominal for 0.2 s"});
                        tripped = true;
                    }
                }
                blk_min = blk_max = meas_net.v_bus;
            } else {
                blk_min = std::min(blk_min, meas_net.v_bus);
                blk_max = std::max(blk_max, meas_net.v_bus);
            }
        }

        if (n == n_steps) break;

        // RK4 with the duty held over the step; load follows its profile.
        const double d = u.duty;
        const double p_mid = load.at(t + 0.5 * dt);
        const auto k1 = model.deriv(x, d, p_now);
        const auto k2 = model.deriv(axpy(x, 0.5 * dt, k1), d, p_mid);
        const auto k3 = model.deriv(axpy(x, 0.5 * dt, k2), d, p_mid);
        const auto k4 = model.deriv(axpy(x, dt, k3), d, load.at(t + dt));
        State next;
        for (std::size_t i = 0; i < x.size(); ++i)
            next[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!finite(next)) throw SimulationDiverged(t + dt, std::move(tr));
        x = next;
    }
    return tr;
}

}  // namespace droopkit

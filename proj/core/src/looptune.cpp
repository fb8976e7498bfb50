#include "droopkit/looptune.hpp"

#include "droopkit/errors.hpp"

#include <cmath>
#include <numbers>

namespace droopkit {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

LoopMargins margins_around(const TransferFunction& loop, double f_c) {
    return margins(loop, f_c / 100.0, f_c * 100.0);
}

}  // namespace

PiGains::PiGains(double kp_, double ki_, Direction direction_) : kp(kp_), ki(ki_), direction(direction_) {
    if (!(kp > 0.0) || !std::isfinite(kp)) throw std::invalid_argument("PiGains: kp must be positive");
    if (!(ki >= 0.0) || !std::isfinite(ki)) throw std::invalid_argument("PiGains: ki must be non-negative");
}

TransferFunction pi_tf(const PiGains& g) {
    return TransferFunction({g.sign() * g.kp, g.sign() * g.ki}, {1.0, 0.0});
}

TuneReport tune_pi(const TransferFunction& plant, double f_c, double pm_target) {
    if (!(f_c > 0.0)) throw std::invalid_argument("tune_pi: f_c must be positive");
    if (!(pm_target > 0.0 && pm_target < 180.0))
        throw std::invalid_argument("tune_pi: pm_target must lie in (0, 180)");

    const double w = 2.0 * std::numbers::pi * f_c;
    const auto p = plant.at_hz(f_c);
    if (std::abs(p) == 0.0) throw UntunableError("plant magnitude is zero at the crossover frequency");

    // PI(jw) = kp - j ki / w must equal the loop target divided by the plant.
    const auto target = std::polar(1.0, (pm_target - 180.0) * kDegToRad);
    const auto z = target / p;
    const double kp = z.real();
    const double ki = -w * z.imag();
    // Rounding slack for ki when the solution sits on the pure-P boundary.
    const double ki_tol = 1e-9 * std::abs(kp) * w;

    TuneReport rep;
    rep.target_f = f_c;
    rep.target_pm = pm_target;
    if (kp > 0.0 && ki >= -ki_tol) {
        rep.gains = PiGains(kp, std::max(ki, 0.0), Direction::direct);
        rep.exact = true;
    } else if (kp < 0.0 && ki <= ki_tol) {
        rep.gains = PiGains(-kp, std::max(-ki, 0.0), Direction::reverse);
        rep.exact = true;
    } else {
        const double kp_h = 1.0 / (std::abs(p) * std::hypot(1.0, 0.1));
        const PiGains direct(kp_h, kp_h * w / 10.0, Direction::direct);
        const PiGains reverse(kp_h, kp_h * w / 10.0, Direction::reverse);
        const double pm_direct =
            wrap_deg(180.0 + std::arg(pi_tf(direct).at_hz(f_c) * p) / kDegToRad);
        const double pm_reverse =
            wrap_deg(180.0 + std::arg(pi_tf(reverse).at_hz(f_c) * p) / kDegToRad);
        rep.gains = pm_direct >= pm_reverse ? direct : reverse;
        rep.exact = false;
    }
    rep.achieved = margins_around(series(pi_tf(rep.gains), plant), f_c);
    if (rep.exact && std::abs(rep.achieved.crossover_hz - f_c) / f_c >= 1e-2) rep.exact = false;
    return rep;
}

TransferFunction loop_gain_current(const TransferFunction& plant_gid, const PiGains& gc) {
    return series(plant_gid, pi_tf(gc));
}

TransferFunction loop_gain_voltage(const TransferFunction& gvi, const PiGains& gv,
                                   const TransferFunction& tci) {
    return series(series(gvi, pi_tf(gv)), tci);
}

bool HierarchyAudit::passed() const noexcept {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

HierarchyAudit check_hierarchy(const ConverterParams& params) {
    HierarchyAudit audit;
    auto add = [&](const char* lo_name, double lo, const char* hi_name, double hi, bool strict) {
        HierarchyCheck c{lo_name, lo, hi_name, hi, strict, strict ? lo < hi : lo <= hi};
        audit.checks.push_back(std::move(c));
    };
    add("f_lpf", params.f_lpf, "f_v", params.f_v, false);
    add("f_v", params.f_v, "f_i", params.f_i, true);
    add("f_i", params.f_i, "f_sw", params.f_sw, true);
    return audit;
}

LoopDesign design_loops(const ConverterParams& params, double p_out, double pm_current,
                        double pm_voltage) {
    LoopDesign d;
    d.op = solve_operating_point(params, params.v_nl, p_out);
    d.plant_current = gid(params, d.op);
    d.current = tune_pi(d.plant_current, params.f_i, pm_current);
    d.tc = loop_gain_current(d.plant_current, d.current.gains);
    d.tci = close_unity_feedback(d.tc);
    d.plant_voltage = series(gvi(params, d.op), d.tci);
    d.voltage = tune_pi(d.plant_voltage, params.f_v, pm_voltage);
    d.tv = loop_gain_voltage(gvi(params, d.op), d.voltage.gains, d.tci);
    return d;
}

}  // namespace droopkit

#include "droopkit/ident.hpp"

#include "droopkit/errors.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace droopkit {

namespace {

void require_same_length(std::span<const double> t, std::span<const double> y) {
    if (t.size() != y.size()) throw std::invalid_argument("time and value columns differ in length");
}

}  // namespace

StepFit fit_time_constant(std::span<const double> t, std::span<const double> y, double t_step,
                          double settle_window, double noise_floor) {
    require_same_length(t, y);
    if (!(settle_window > 0.0)) throw std::invalid_argument("settle window must be positive");

    const auto first_post = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), t_step) - t.begin());
    if (first_post == 0) throw std::invalid_argument("no samples before the step time");
    const double t_end = t_step + settle_window;
    if (t.back() < t_end * (1.0 - 1e-12) && t.back() < t_end - 1e-15)
        throw std::invalid_argument("trace does not cover the settle window");

    StepFit fit;
    fit.t_step = t_step;

    const std::size_t n_pre = std::min<std::size_t>(10, first_post);
    double acc = 0.0;
    for (std::size_t i = first_post - n_pre; i < first_post; ++i) acc += y[i];
    fit.y0 = acc / static_cast<double>(n_pre);
    fit.y_inf = window_mean(t, y, t_step + 0.75 * settle_window, t_end);

    double full_scale = 0.0;
    for (std::size_t i = first_post - n_pre; i < t.size() && t[i] <= t_end; ++i)
        full_scale = std::max(full_scale, std::abs(y[i]));
    const double delta = fit.y_inf - fit.y0;
    if (std::abs(delta) <= noise_floor * full_scale)
        throw NoStepError("no detectable step: settled change is below the noise floor");

    const double level = fit.y0 + (1.0 - std::exp(-1.0)) * delta;
    const double dir = delta > 0.0 ? 1.0 : -1.0;
    double t_prev = t_step;
    double y_prev = fit.y0;
    std::optional<double> crossing;
    for (std::size_t i = first_post; i < t.size() && t[i] <= t_end; ++i) {
        if ((y[i] - level) * dir >= 0.0) {
            const double span = y[i] - y_prev;
            const double frac = span != 0.0 ? (level - y_prev) / span : 1.0;
            crossing = t_prev + std::clamp(frac, 0.0, 1.0) * (t[i] - t_prev);
            break;
        }
        t_prev = t[i];
        y_prev = y[i];
    }
    if (!crossing || !(*crossing > t_step))
        throw NonFirstOrderError("step response never reaches the one-time-constant level");

    fit.tau = *crossing - t_step;
    fit.bw_paper = 1.0 / fit.tau;
    fit.bw_standard = 1.0 / (2.0 * std::numbers::pi * fit.tau);

    // Least-squares exponential with y0/y_inf fixed, as a cross-check.
    auto sse = [&](double log_tau) {
        const double tau = std::exp(log_tau);
        double s = 0.0;
        for (std::size_t i = first_post; i < t.size() && t[i] <= t_end; ++i) {
            const double model = fit.y_inf - delta * std::exp(-(t[i] - t_step) / tau);
            s += (y[i] - model) * (y[i] - model);
        }
        return s;
    };
    const double lt = std::log(fit.tau);
    const auto best = boost::math::tools::brent_find_minima(sse, lt - std::log(20.0), lt + std::log(20.0), 40);
    std::size_t n_win = 0;
    for (std::size_t i = first_post; i < t.size() && t[i] <= t_end; ++i) ++n_win;
    fit.tau_refined = std::exp(best.first);
    fit.rms_residual = n_win ? std::sqrt(best.second / static_cast<double>(n_win)) : 0.0;
    return fit;
}

DroopFit fit_droop_slope(std::span<const DroopPoint> points) {
    if (points.size() < 2) throw RankDeficientError("droop fit needs at least two points");
    const double n = static_cast<double>(points.size());
    double mx = 0.0, mv = 0.0;
    for (const auto& p : points) {
        mx += p.x;
        mv += p.v;
    }
    mx /= n;
    mv /= n;
    double sxx = 0.0, sxv = 0.0, svv = 0.0;
    for (const auto& p : points) {
        sxx += (p.x - mx) * (p.x - mx);
        sxv += (p.x - mx) * (p.v - mv);
        svv += (p.v - mv) * (p.v - mv);
    }
    if (sxx == 0.0) throw RankDeficientError("droop fit needs at least two distinct x values");

    DroopFit fit;
    const double b = sxv / sxx;
    fit.slope = -b;
    fit.intercept = mv - b * mx;
    if (svv == 0.0) {
        fit.r_squared = 1.0;
    } else {
        double ss_res = 0.0;
        for (const auto& p : points) {
            const double r = p.v - (fit.intercept + b * p.x);
            ss_res += r * r;
        }
        fit.r_squared = std::clamp(1.0 - ss_res / svv, 0.0, 1.0);
    }
    return fit;
}

double fit_ramp_rate(std::span<const double> t, std::span<const double> v, double t_start,
                     double t_end) {
    require_same_length(t, v);
    double mt = 0.0, mv = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_start || t[i] > t_end) continue;
        mt += t[i];
        mv += v[i];
        ++n;
    }
    if (n < 3) throw ShortWindowError("ramp window holds fewer than 3 samples");
    mt /= static_cast<double>(n);
    mv /= static_cast<double>(n);
    double stt = 0.0, stv = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_start || t[i] > t_end) continue;
        stt += (t[i] - mt) * (t[i] - mt);
        stv += (t[i] - mt) * (v[i] - mv);
    }
    return stv / stt;
}

double window_mean(std::span<const double> t, std::span<const double> signal, double t_lo,
                   double t_hi) {
    require_same_length(t, signal);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi) continue;
        acc += signal[i];
        ++n;
    }
    if (n == 0) throw std::invalid_argument("averaging window holds no samples");
    return acc / static_cast<double>(n);
}

double settle_time(std::span<const double> t, std::span<const double> signal, double t_from,
                   double tol) {
    require_same_length(t, signal);
    if (t.empty()) throw std::invalid_argument("empty signal");
    const double final_value = signal.back();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_from) continue;
        if (std::abs(signal[i] - final_value) <= tol) return t[i] - t_from;
    }
    return t.back() - t_from;
}

namespace experiments {

namespace {

Scenario base(const ConverterParams& params) {
    Scenario s;
    s.params = params;
    s.dt = 1e-6;
    return s;
}

}  // namespace

Scenario current_step(const ConverterParams& params, double i_from, double i_to, double t_step,
                      double settle) {
    auto s = base(params);
    // Load that makes i_from the steady inductor current at v_nl.
    s.p_load = params.e_src * i_from - params.r_series() * i_from * i_from;
    s.t_end = t_step + settle * 1.2;
    s.decimation = 1;
    s.events = {{0.0, action::SetCurrentRef{i_from}}, {t_step, action::SetCurrentRef{i_to}}};
    return s;
}

Scenario droop_enable(const ConverterParams& params, double p_load, double coefficient,
                      double t_step, double settle) {
    auto s = base(params);
    s.p_load = p_load;
    s.t_end = t_step + settle * 1.2;
    s.decimation = 10;
    s.events = {{t_step, action::SetDroop{DroopMode::vp, coefficient}}};
    return s;
}

Scenario droop_steady(const ConverterParams& params, double p_load, double coefficient) {
    auto s = base(params);
    s.p_load = p_load;
    s.t_end = 0.15;
    s.decimation = 10;
    s.events = {{0.02, action::SetDroop{DroopMode::vp, coefficient}}};
    return s;
}

Scenario reference_restore(const ConverterParams& params, double p_load, double coefficient,
                           double lift, double t_cmd) {
    auto s = base(params);
    s.p_load = p_load;
    s.droop_mode = DroopMode::vp;
    s.droop_coef = coefficient;
    s.t_end = t_cmd + lift / params.ramp + 0.2;
    s.decimation = 100;
    s.events = {{t_cmd, action::SetVref{params.v_nl + lift}}};
    return s;
}

}  // namespace experiments

CharacterizationReport characterize_model(const ConverterParams& params) {
    CharacterizationReport rep;

    {
        const double t_step = 1e-3, settle = 0.5e-3;
        const auto tr = run_scenario(experiments::current_step(params, 5.0, 10.0, t_step, settle));
        rep.current_loop = fit_time_constant(tr.t, tr.i_l, t_step, settle);
    }
    {
        const double t_step = 0.05, settle = 0.05;
        const double coef = 60.0 / 3600.0;
        const auto tr = run_scenario(experiments::droop_enable(params, 3600.0, coef, t_step, settle));
        rep.droop_lpf = fit_time_constant(tr.t, tr.v_bus, t_step, settle);
    }
    for (const double p : {900.0, 1800.0, 2700.0, 3600.0}) {
        const auto tr = run_scenario(experiments::droop_steady(params, p, params.k_vp));
        const double t_end = tr.t.back();
        rep.droop_sweep.push_back({p, window_mean(tr.t, tr.v_bus, t_end - 0.01, t_end)});
    }
    rep.droop = fit_droop_slope(rep.droop_sweep);
    {
        const double lift = 60.0, t_cmd = 0.05;
        const auto tr =
            run_scenario(experiments::reference_restore(params, 3600.0, lift / 3600.0, lift, t_cmd));
        const double ramp_time = lift / params.ramp;
        rep.ramp_rate = fit_ramp_rate(tr.t, tr.v_bus, t_cmd + 0.1 * ramp_time, t_cmd + 0.9 * ramp_time);
        rep.restore_time = settle_time(tr.t, tr.v_ref_eff, t_cmd, 1e-6);
    }
    return rep;
}

}  // namespace droopkit

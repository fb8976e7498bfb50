#include "droopkit/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace droopkit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double equivalent_cpl_impedance(double v, double p) {
    if (!(v > 0.0)) throw std::invalid_argument("equivalent_cpl_impedance: v must be positive");
    if (!(p >= 0.0)) throw std::invalid_argument("equivalent_cpl_impedance: p must be non-negative");
    if (p == 0.0) return kInf;
    return v * v / p;
}

double min_capacitance(double l, double k, double re) {
    if (!(l >= 0.0 && k > 0.0 && re > 0.0))
        throw std::invalid_argument("min_capacitance: arguments must be positive");
    return l / (k * re);
}

double max_inductance(double k, double c, double re) {
    if (!(k > 0.0 && c >= 0.0 && re > 0.0))
        throw std::invalid_argument("max_inductance: arguments must be positive");
    if (c == 0.0) return 0.0;
    return k * c * re;
}

double DroopLaw::half_voltage_power() const noexcept {
    return k_vp > 0.0 ? 0.5 * v_nl / k_vp : kInf;
}

InstabilityPrediction predict_instability_power(const DroopLaw& law, double l, double c, double k,
                                                std::optional<double> p_upper) {
    if (!(l > 0.0 && c > 0.0 && k > 0.0 && law.v_nl > 0.0 && law.k_vp >= 0.0))
        throw std::invalid_argument("predict_instability_power: parameters must be positive");

    // g(p) = p L / (K v(p)^2) - C rises monotonically while v(p) > 0.
    auto g = [&](double p) {
        const double v = law.voltage(p);
        return p * l / (k * v * v) - c;
    };

    InstabilityPrediction out;
    double hi = p_upper.value_or(law.half_voltage_power());
    if (std::isinf(hi)) {
        hi = 1.0;
        while (g(hi) < 0.0 && hi < 1e15) hi *= 2.0;
    }
    out.p_upper = hi;
    if (g(hi) < 0.0) return out;

    double lo = 0.0;
    while (hi - lo > 1e-13 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    out.p_crit = 0.5 * (lo + hi);
    return out;
}

InstabilityPrediction predict_instability_power(const ConverterParams& params, double l, double c,
                                                double k) {
    return predict_instability_power(DroopLaw{params.v_nl, params.k_vp}, l, c, k);
}

StabilityAssessment assess_stability(const ConverterParams& params, double l, double c, double k,
                                     double p) {
    const DroopLaw law{params.v_nl, params.k_vp};
    StabilityAssessment a;
    a.p = p;
    a.v = law.voltage(p);
    a.re = equivalent_cpl_impedance(a.v, p);
    a.c_min = min_capacitance(l, k, a.re);
    a.l_max = std::isinf(a.re) ? kInf : max_inductance(k, c, a.re);
    a.stable = c > a.c_min;
    a.margin = a.c_min > 0.0 ? c / a.c_min : kInf;
    a.p_crit = predict_instability_power(law, l, c, k).p_crit;
    return a;
}

std::optional<double> detect_oscillation(std::span<const double> t, std::span<const double> v,
                                         double f_lo, double f_hi, const OscillationOptions& opt) {
    if (t.size() != v.size()) throw std::invalid_argument("detect_oscillation: column length mismatch");
    if (!(f_lo > 0.0 && f_hi > f_lo)) throw std::invalid_argument("detect_oscillation: need 0 < f_lo < f_hi");
    if (t.size() < 3) return std::nullopt;

    const double span = t.back() - t.front();
    const double mean_dt = span / static_cast<double>(t.size() - 1);
    if (!(1.0 / mean_dt > 2.0 * f_hi))
        throw std::invalid_argument("detect_oscillation: sample rate must exceed 2 f_hi");

    const double window = std::max(opt.window, 1.0 / f_lo);
    const double hop = 0.5 * window;
    const double threshold = opt.threshold_frac * opt.nominal;

    std::vector<double> detrended;
    std::optional<double> prev_pp;
    std::size_t begin = 0;
    for (double a = t.front(); a + window <= t.back() + 1e-12; a += hop) {
        while (begin < t.size() && t[begin] < a) ++begin;
        std::size_t end = begin;
        while (end < t.size() && t[end] <= a + window) ++end;
        if (end - begin < 3) continue;

        // First differences minus their mean, re-accumulated: the window with
        // its endpoint-to-endpoint ramp removed.
        const double slope = (v[end - 1] - v[begin]) / static_cast<double>(end - 1 - begin);
        detrended.assign(1, 0.0);
        for (std::size_t i = begin + 1; i < end; ++i)
            detrended.push_back(detrended.back() + (v[i] - v[i - 1]) - slope);

        const auto [mn, mx] = std::minmax_element(detrended.begin(), detrended.end());
        const double pp = *mx - *mn;
        // A window is only judged against its predecessor, so the envelope
        // must be non-decaying, not merely large.
        if (prev_pp && pp > threshold && pp >= *prev_pp) {
            double lo = detrended.front(), hi = detrended.front();
            for (std::size_t i = 0; i < detrended.size(); ++i) {
                lo = std::min(lo, detrended[i]);
                hi = std::max(hi, detrended[i]);
                if (hi - lo > threshold) return t[begin + i];
            }
            return t[end - 1];
        }
        prev_pp = pp;
    }
    return std::nullopt;
}

std::optional<double> detect_oscillation(const SimTrace& trace, double f_lo, double f_hi,
                                         const OscillationOptions& opt) {
    return detect_oscillation(trace.t, trace.v_bus, f_lo, f_hi, opt);
}

}  // namespace droopkit

#include "droopkit/plant.hpp"

#include "droopkit/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace droopkit {

std::vector<ValidationIssue> validate(const ConverterParams& p) {
    std::vector<ValidationIssue> out;
    auto positive = [&](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) out.push_back({name, std::string(name) + " must be positive"});
    };
    positive(p.v_nl, "v_nl");
    positive(p.e_src, "e_src");
    positive(p.r_bat, "r_bat");
    positive(p.l_ind, "l_ind");
    positive(p.r_esr, "r_esr");
    positive(p.c_out, "c_out");
    positive(p.k_vp, "k_vp");
    positive(p.k_vi, "k_vi");
    positive(p.f_i, "f_i");
    positive(p.f_v, "f_v");
    positive(p.f_lpf, "f_lpf");
    positive(p.ramp, "ramp");
    positive(p.f_sw, "f_sw");
    if (!(p.e_src < p.v_nl)) out.push_back({"e_src", "e_src must be below v_nl (boost operation)"});
    if (!(p.f_lpf <= p.f_v))
        out.push_back({"f_lpf", "bandwidth hierarchy violated: f_lpf must not exceed f_v"});
    if (!(p.f_v < p.f_i)) out.push_back({"f_v", "bandwidth hierarchy violated: f_v must be below f_i"});
    if (!(p.f_i < p.f_sw)) out.push_back({"f_i", "bandwidth hierarchy violated: f_i must be below f_sw"});
    return out;
}

OperatingPoint solve_operating_point(const ConverterParams& params, double v_out, double p_out) {
    if (!(p_out >= 0.0)) throw std::invalid_argument("solve_operating_point: p_out must be >= 0");
    if (!(v_out > params.e_src))
        throw std::invalid_argument("solve_operating_point: v_out must exceed e_src");

    const double e = params.e_src;
    const double r = params.r_series();
    // Eliminating the duty cycle leaves r i^2 - e i + p = 0.
    if (e * e - 4.0 * r * p_out < 0.0) {
        std::ostringstream os;
        os << "infeasible operating point: " << p_out << " W exceeds source capability "
           << e * e / (4.0 * r) << " W";
        throw InfeasibleOperatingPoint(os.str());
    }
    auto f = [&](double i) { return r * i * i - e * i + p_out; };
    auto df = [&](double i) { return 2.0 * r * i - e; };

    // From i = p/e Newton approaches the low root monotonically from below.
    double i = p_out / e;
    for (int it = 0; it < 100; ++it) {
        const double step = f(i) / df(i);
        i -= step;
        if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(i))) break;
    }

    OperatingPoint op;
    op.i_l = i;
    op.v_out = v_out;
    op.p_out = p_out;
    op.duty = 1.0 - (e - i * r) / v_out;
    op.r_load = p_out > 0.0 ? v_out * v_out / p_out : std::numeric_limits<double>::infinity();
    if (!(op.duty >= 0.0 && op.duty < 1.0))
        throw InfeasibleOperatingPoint("infeasible operating point: duty outside [0, 1)");
    return op;
}

TransferFunction gid(const ConverterParams& params, const OperatingPoint& op) {
    if (op.r_load == 0.0) throw std::invalid_argument("gid: zero load resistance");
    const double u = 1.0 - op.duty;
    const double l = params.l_ind;
    const double c = params.c_out;
    const double l_over_r = std::isinf(op.r_load) ? 0.0 : l / op.r_load;
    return TransferFunction({-l * op.i_l, u * op.v_out}, {l * c, l_over_r, u * u});
}

TransferFunction gvi(const ConverterParams& params, const OperatingPoint& op) {
    const double u = 1.0 - op.duty;
    return TransferFunction({-params.l_ind * op.i_l, u * op.v_out},
                            {op.v_out * params.c_out, 2.0 * u * op.i_l});
}

TransferFunction averaged_current_plant(const ConverterParams& params) {
    return TransferFunction({params.v_nl}, {params.l_ind, params.r_series()});
}

}  // namespace droopkit

#include <doctest.h>

#include "droopkit/plant.hpp"
#include "support.hpp"

#include <complex>
#include <limits>
#include <numbers>

using namespace droopkit;
using testsupport::rel_err;

namespace {

// Bisection on r i^2 - e i + p over [0, e / (2 r)], where the low root lives.
double bisect_low_root(double e, double r, double p) {
    double lo = 0.0, hi = e / (2.0 * r);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (r * mid * mid - e * mid + p > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

ConverterParams lossless() {
    ConverterParams p;
    p.r_esr = 0.0;
    p.r_bat = 0.0;
    return p;
}

}  // namespace

TEST_CASE("reference parameter set") {
    const ConverterParams p;
    CHECK(p.v_nl == 350.0);
    CHECK(p.e_src == 130.0);
    CHECK(p.r_bat == 0.03);
    CHECK(p.l_ind == 2e-3);
    CHECK(p.r_esr == 0.01);
    CHECK(p.c_out == 3.3e-3);
    CHECK(p.k_vp == doctest::Approx(10.0 / 3600.0));
    CHECK(p.k_vi == 1.0);
    CHECK(p.f_i == 20e3);
    CHECK(p.f_v == 200.0);
    CHECK(p.f_lpf == 200.0);
    CHECK(p.ramp == 50.0);
    CHECK(p.f_sw == 30e3);
    CHECK(validate(p).empty());
}

TEST_CASE("parameter validation") {
    ConverterParams p;
    p.f_i = 100.0;
    auto issues = validate(p);
    REQUIRE_FALSE(issues.empty());
    CHECK(issues.front().key == "f_v");

    p = ConverterParams{};
    p.e_src = 400.0;
    issues = validate(p);
    REQUIRE(issues.size() == 1);
    CHECK(issues.front().key == "e_src");

    p = ConverterParams{};
    p.l_ind = -1.0;
    CHECK(validate(p).front().key == "l_ind");
}

TEST_CASE("operating point at no load") {
    const auto op = solve_operating_point(ConverterParams{}, 350.0, 0.0);
    CHECK(op.i_l == 0.0);
    CHECK(1.0 - op.duty == doctest::Approx(130.0 / 350.0).epsilon(1e-12));
    CHECK(std::isinf(op.r_load));
}

TEST_CASE("lossless operating point: E IL = P") {
    const auto op = solve_operating_point(lossless(), 350.0, 3600.0);
    CHECK(op.i_l == doctest::Approx(3600.0 / 130.0).epsilon(1e-12));
    CHECK(op.duty == doctest::Approx(1.0 - 130.0 / 350.0).epsilon(1e-12));
}

TEST_CASE("lossy operating point agrees with a bisection oracle") {
    const ConverterParams p;
    const auto op = solve_operating_point(p, 350.0, 3600.0);
    const double oracle = bisect_low_root(p.e_src, p.r_series(), 3600.0);
    CHECK(rel_err(op.i_l, oracle) < 1e-12);
    const double u = 1.0 - op.duty;
    CHECK(std::abs(u * 350.0 - (p.e_src - op.i_l * p.r_series())) < 1e-12 * 350.0);
    CHECK(std::abs(op.i_l * u - 3600.0 / 350.0) < 1e-12 * (3600.0 / 350.0));
    CHECK(op.r_load == doctest::Approx(350.0 * 350.0 / 3600.0));
}

TEST_CASE("infeasible power and bad inputs") {
    const ConverterParams p;
    const double p_max = p.e_src * p.e_src / (4.0 * p.r_series());
    CHECK_THROWS_AS(solve_operating_point(p, 350.0, p_max * 1.01), InfeasibleOperatingPoint);
    CHECK_THROWS_AS(solve_operating_point(p, 100.0, 100.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_operating_point(p, 350.0, -1.0), std::invalid_argument);
}

TEST_CASE("gid structure") {
    const ConverterParams p;
    const auto op = solve_operating_point(p, 350.0, 3600.0);
    const auto g = gid(p, op);
    const double u = 1.0 - op.duty;
    CHECK(std::abs(g(0.0) - std::complex<double>(350.0 / u, 0.0)) < 1e-9 * 350.0 / u);

    // RHP zero of the lossless 3600 W point
    const auto op_ll = solve_operating_point(lossless(), 350.0, 3600.0);
    const auto g_ll = gid(lossless(), op_ll);
    const double s_zero = -g_ll.num()[1] / g_ll.num()[0];
    CHECK(s_zero > 0.0);
    CHECK(s_zero / (2.0 * std::numbers::pi) ==
          doctest::Approx(130.0 / (2.0 * std::numbers::pi * 2e-3 * (3600.0 / 130.0))).epsilon(1e-9));
    CHECK(s_zero / (2.0 * std::numbers::pi) == doctest::Approx(373.6).epsilon(1e-3));

    const auto g0 = gid(p, solve_operating_point(p, 350.0, 0.0));
    CHECK(g0.num().size() == 1);
    REQUIRE(g0.den().size() == 3);
    CHECK(g0.den()[1] == 0.0);
}

TEST_CASE("gvi structure") {
    const ConverterParams p;
    const auto op = solve_operating_point(p, 350.0, 3600.0);
    const auto g = gvi(p, op);
    CHECK(std::abs(g(0.0).real() - 350.0 / (2.0 * op.i_l)) < 1e-9 * 350.0 / op.i_l);

    // shares the numerator with gid up to the monic scaling of each
    const auto a = gid(p, op), b = gvi(p, op);
    CHECK(rel_err(a.num()[0] / a.num()[1], b.num()[0] / b.num()[1]) < 1e-12);

    const auto op_ll = solve_operating_point(lossless(), 350.0, 3600.0);
    const auto g_ll = gvi(lossless(), op_ll);
    const double pole = -g_ll.den()[1] / g_ll.den()[0];
    CHECK(-pole / (2.0 * std::numbers::pi) == doctest::Approx(2.835).epsilon(2e-3));

    // no-load: (1 - D) / (C s)
    const auto g0 = gvi(p, solve_operating_point(p, 350.0, 0.0));
    const double w = 2.0 * std::numbers::pi * 10.0;
    const auto expected = (130.0 / 350.0) / (p.c_out * std::complex<double>(0.0, w));
    CHECK(rel_err(g0.at_hz(10.0), expected) < 1e-12);
}

TEST_CASE("averaged current plant") {
    const ConverterParams p;
    const auto g = averaged_current_plant(p);
    CHECK(g(0.0).real() == doctest::Approx(p.v_nl / p.r_series()));
}

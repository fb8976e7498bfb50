#include <doctest.h>

#include "droopkit/errors.hpp"
#include "droopkit/ident.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace droopkit;
using testsupport::rel_err;

namespace {

struct Signal {
    std::vector<double> t, y;
};

// Exact first-order step from y0 to y1 at t_step, sampled every dt over [0, t_end].
Signal exp_step(double y0, double y1, double tau, double t_step, double dt, double t_end) {
    Signal s;
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) * dt;
        s.t.push_back(t);
        s.y.push_back(t < t_step ? y0 : y1 + (y0 - y1) * std::exp(-(t - t_step) / tau));
    }
    return s;
}

}  // namespace

TEST_CASE("fit_time_constant on an exact 50 us step") {
    const auto s = exp_step(0.0, 5.0, 5e-5, 1e-4, 1e-6, 1e-4 + 1e-3);
    const auto fit = fit_time_constant(s.t, s.y, 1e-4, 1e-3);
    CHECK(rel_err(fit.tau, 5e-5) < 0.01);
    CHECK(fit.bw_paper == doctest::Approx(20e3).epsilon(0.01));
    CHECK(fit.bw_paper * fit.tau == 1.0);
    CHECK(fit.bw_standard * (2.0 * std::numbers::pi * fit.tau) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fit.y0 == 0.0);
    CHECK(fit.y_inf == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(rel_err(fit.tau_refined, 5e-5) < 1e-3);
    CHECK(fit.rms_residual < 1e-3);
}

TEST_CASE("fit_time_constant on a falling 4.87 ms step") {
    const auto s = exp_step(350.0, 290.0, 4.87e-3, 0.01, 1e-5, 0.11);
    const auto fit = fit_time_constant(s.t, s.y, 0.01, 0.1);
    CHECK(fit.bw_paper == doctest::Approx(205.3).epsilon(0.01));
    CHECK(fit.y_inf == doctest::Approx(290.0).epsilon(1e-6));
}

TEST_CASE("fit_time_constant accepts irregular sampling") {
    Signal s;
    double t = 0.0;
    int k = 0;
    while (t <= 0.065) {
        s.t.push_back(t);
        s.y.push_back(t < 0.01 ? 1.0 : 3.0 - 2.0 * std::exp(-(t - 0.01) / 2e-3));
        t += (k++ % 3 == 0) ? 7e-5 : 2e-5;
    }
    const auto fit = fit_time_constant(s.t, s.y, 0.01, 0.05);
    CHECK(rel_err(fit.tau, 2e-3) < 0.01);
}

TEST_CASE("fit_time_constant errors") {
    Signal flat;
    for (int i = 0; i <= 1000; ++i) {
        flat.t.push_back(i * 1e-6);
        flat.y.push_back(3.0);
    }
    CHECK_THROWS_AS(fit_time_constant(flat.t, flat.y, 1e-4, 5e-4), NoStepError);

    // An ideal jump has no time constant to measure.
    Signal jump;
    for (int i = 0; i <= 1000; ++i) {
        jump.t.push_back(i * 1e-6);
        jump.y.push_back(i >= 100 ? 1.0 : 0.0);
    }
    CHECK_THROWS_AS(fit_time_constant(jump.t, jump.y, jump.t[100], 5e-4), NonFirstOrderError);

    CHECK_THROWS_AS(fit_time_constant(flat.t, flat.y, 0.0, 1e-4), std::invalid_argument);
    CHECK_THROWS_AS(fit_time_constant(flat.t, flat.y, 5e-4, 1e-3), std::invalid_argument);
}

TEST_CASE("fit_droop_slope") {
    std::vector<DroopPoint> pts;
    for (double x = 0.0; x <= 320.0; x += 40.0) pts.push_back({x, 100.0 - 500.0 / 60000.0 * x});
    auto fit = fit_droop_slope(pts);
    CHECK(rel_err(fit.slope, 500.0 / 60000.0) < 1e-9);
    CHECK(rel_err(fit.intercept, 100.0) < 1e-9);
    CHECK(fit.r_squared == 1.0);

    for (auto& p : pts) p.v = 100.0 - 1000.0 / 60000.0 * p.x;
    CHECK(fit_droop_slope(pts).slope == doctest::Approx(1.667e-2).epsilon(1e-3));

    const std::vector<DroopPoint> two{{0.0, 350.0}, {3600.0, 340.0}};
    CHECK(rel_err(fit_droop_slope(two).slope, 10.0 / 3600.0) < 1e-12);

    const std::vector<DroopPoint> same{{5.0, 1.0}, {5.0, 2.0}};
    CHECK_THROWS_AS(fit_droop_slope(same), RankDeficientError);
    CHECK_THROWS_AS(fit_droop_slope(std::vector<DroopPoint>{{1.0, 1.0}}), RankDeficientError);

    const std::vector<DroopPoint> noisy{{0, 10.0}, {1, 9.0}, {2, 8.5}, {3, 6.0}};
    const auto nf = fit_droop_slope(noisy);
    CHECK(nf.r_squared > 0.0);
    CHECK(nf.r_squared < 1.0);
}

TEST_CASE("fit_ramp_rate") {
    std::vector<double> t, v;
    for (int i = 0; i <= 1200; ++i) {
        t.push_back(i * 1e-3);
        v.push_back(290.0 + 50.0 * i * 1e-3);
    }
    CHECK(fit_ramp_rate(t, v, 0.0, 1.2) == doctest::Approx(50.0).epsilon(5e-3));

    std::vector<double> flat(t.size(), 7.0);
    CHECK(fit_ramp_rate(t, flat, 0.1, 0.5) == 0.0);

    CHECK_THROWS_AS(fit_ramp_rate(t, v, 0.1, 0.1011), ShortWindowError);
}

TEST_CASE("fit_ramp_rate recovers the configured rate from a simulated restore") {
    ConverterParams p;
    p.ramp = 37.0;
    const auto sc = experiments::reference_restore(p, 3600.0, 30.0 / 3600.0, 30.0);
    const auto tr = run_scenario(sc);
    const double ramp_time = 30.0 / 37.0;
    const double rate = fit_ramp_rate(tr.t, tr.v_bus, 0.05 + 0.1 * ramp_time, 0.05 + 0.9 * ramp_time);
    CHECK(rate == doctest::Approx(37.0).epsilon(0.01));
}

TEST_CASE("settle_time and window_mean") {
    const std::vector<double> t{0, 1, 2, 3, 4};
    const std::vector<double> y{0, 5, 9, 10, 10};
    CHECK(settle_time(t, y, 0.0, 0.5) == 3.0);
    CHECK(settle_time(t, y, 1.0, 1.0) == 1.0);
    CHECK(window_mean(t, y, 1.0, 2.0) == 7.0);
    CHECK_THROWS_AS(window_mean(t, y, 10.0, 11.0), std::invalid_argument);
}

TEST_CASE("characterize_model on the reference converter") {
    const auto rep = characterize_model(ConverterParams{});
    CHECK(rep.current_loop.bw_paper >= 16e3);
    CHECK(rep.current_loop.bw_paper <= 24e3);
    CHECK(std::abs(rep.droop.slope - 10.0 / 3600.0) / (10.0 / 3600.0) < 0.02);
    CHECK(rep.droop.r_squared > 0.999);
    CHECK(rep.droop_sweep.size() >= 4);
    CHECK(std::abs(rep.droop_lpf.bw_paper - 200.0) / 200.0 < 0.10);
    CHECK(rep.ramp_rate == doctest::Approx(50.0).epsilon(0.01));
    CHECK(rep.restore_time == doctest::Approx(1.2).epsilon(0.02));
}

#include <doctest.h>

#include "droopkit/ident.hpp"
#include "droopkit/simcore.hpp"
#include "support.hpp"

#include <cmath>

using namespace droopkit;
using testsupport::rel_err;

namespace {

Scenario steady(double p_load, double t_end = 0.1) {
    Scenario s;
    s.p_load = p_load;
    s.t_end = t_end;
    return s;
}

double tail_mean(const SimTrace& tr, std::span<const double> col, double span) {
    return window_mean(tr.t, col, tr.t.back() - span, tr.t.back());
}

}  // namespace

TEST_CASE("ramp_step") {
    CHECK(ramp_step(350.0, 350.0, 50.0, 1e-3) == 350.0);
    CHECK(ramp_step(349.999, 350.0, 50.0, 1e-3) == 350.0);
    CHECK(ramp_step(350.0, 300.0, 50.0, 1e-3) == doctest::Approx(349.95));

    double v = 290.0;
    for (int i = 0; i < 1199; ++i) v = ramp_step(v, 350.0, 50.0, 1e-3);
    CHECK(v < 350.0 - 0.04);
    v = ramp_step(v, 350.0, 50.0, 1e-3);
    CHECK(std::abs(v - 350.0) < 1e-9);
}

TEST_CASE("lpf_step") {
    CHECK(lpf_step(12.5, 12.5, 200.0, 1e-6) == 12.5);

    double y = 0.0;
    for (int i = 0; i < 5000; ++i) y = lpf_step(y, 60.0, 200.0, 1e-6);
    CHECK(rel_err(y, 60.0 * (1.0 - std::exp(-1.0))) < 1e-9);
    CHECK(y == doctest::Approx(37.93).epsilon(1e-3));

    CHECK(std::abs(lpf_step(0.0, 60.0, 200.0, 1.0) - 60.0) < 1e-9 * 60.0);
}

TEST_CASE("droop_drop") {
    CHECK(droop_drop(DroopMode::vp, 10.0 / 3600.0, 3600.0, 0.0) == doctest::Approx(10.0));
    CHECK(droop_drop(DroopMode::vp, 1000.0 / 60000.0, 0.0, 0.0) == 0.0);
    CHECK(droop_drop(DroopMode::vp, 500.0 / 60000.0, 320.0, 0.0) == doctest::Approx(2.667).epsilon(1e-3));
    CHECK(droop_drop(DroopMode::vi, 1.0, 3600.0, 10.0) == 10.0);
    CHECK(droop_drop(DroopMode::none, 1.0, 3600.0, 10.0) == 0.0);
}

TEST_CASE("cpl_current") {
    CHECK(cpl_current(350.0, 3600.0, 50.0) == doctest::Approx(10.286).epsilon(1e-4));
    CHECK(cpl_current(123.0, 0.0, 50.0) == 0.0);
    // continuous at v_min, resistive below
    CHECK(cpl_current(50.0, 1000.0, 50.0) == doctest::Approx(20.0));
    CHECK(cpl_current(25.0, 1000.0, 50.0) == doctest::Approx(10.0));

    // incremental impedance by central difference
    const double v = 350.0 - 10.0 / 3600.0 * 4600.0, p = 4600.0, h = 1e-4;
    const double dv_di = (2.0 * h) / (cpl_current(v + h, p, 50.0) - cpl_current(v - h, p, 50.0));
    CHECK(dv_di == doctest::Approx(-v * v / p).epsilon(1e-6));
    CHECK(dv_di == doctest::Approx(-24.7).epsilon(2e-3));
}

TEST_CASE("controller_step at equilibrium leaves the state unchanged") {
    Scenario s = steady(1800.0);
    const auto init = initial_state(s);
    const auto design = design_controller(s.params);
    ControlState ctl = init.ctl;
    const ControllerInput meas{init.net, init.net.i_line};
    const auto out = controller_step(ctl, meas, design.gains, s.params, s.dt);
    CHECK(ctl.int_v == doctest::Approx(init.ctl.int_v).epsilon(1e-12));
    CHECK(ctl.int_i == doctest::Approx(init.ctl.int_i).epsilon(1e-12));
    CHECK(out.duty == doctest::Approx(init.ctl.int_i).epsilon(1e-12));
    CHECK(out.v_ref_eff == doctest::Approx(350.0));
}

TEST_CASE("controller clamps and freezes integrators") {
    const ConverterParams p;
    const auto design = design_controller(p);
    ControlState ctl;
    ctl.v_ref_cmd = ctl.v_ref_ramped = 350.0;
    ctl.int_v = 60.0;
    ctl.int_i = 0.98;
    ControllerInput meas;
    meas.net.v_c = 100.0;  // large positive voltage error
    meas.net.i_l = 0.0;
    const auto out = controller_step(ctl, meas, design.gains, p, 1e-6);
    CHECK(out.i_ref == 60.0);
    CHECK(ctl.int_v == 60.0);
    CHECK(out.duty <= 0.98);
    CHECK(out.duty >= 0.0);
}

TEST_CASE("regulation without droop") {
    const auto tr = run_scenario(steady(3600.0, 0.2));
    CHECK(std::abs(tail_mean(tr, tr.v_bus, 0.02) - 350.0) < 0.1);
    CHECK(tr.annotations.empty());
}

TEST_CASE("steady VP droop: 340 V and 330 V at 3600 W") {
    for (const double k : {10.0, 20.0}) {
        Scenario s = steady(3600.0, 0.2);
        s.events.push_back({0.02, action::SetDroop{DroopMode::vp, k / 3600.0}});
        const auto tr = run_scenario(s);
        CHECK(std::abs(tail_mean(tr, tr.v_bus, 0.02) - (350.0 - k)) < 0.5);
        CHECK(std::abs(tr.v_ref_eff.back() - (350.0 - k)) < 0.5);
    }
}

TEST_CASE("VI droop settles on v = v_nl - K i") {
    Scenario s = steady(3600.0, 0.2);
    s.events.push_back({0.02, action::SetDroop{DroopMode::vi, 1.0}});
    const auto tr = run_scenario(s);
    const double v = tail_mean(tr, tr.v_bus, 0.02);
    // v = 350 - 3600 / v
    const double oracle = 0.5 * (350.0 + std::sqrt(350.0 * 350.0 - 4.0 * 3600.0));
    CHECK(std::abs(v - oracle) < 0.05);
}

TEST_CASE("droop with no load leaves the reference untouched") {
    Scenario s = steady(0.0, 0.1);
    s.events.push_back({0.01, action::SetDroop{DroopMode::vp, 60.0 / 3600.0}});
    const auto tr = run_scenario(s);
    for (const double v : tr.v_bus) CHECK(v == doctest::Approx(350.0).epsilon(1e-12));
}

TEST_CASE("energy balance in steady state") {
    const ConverterParams p;
    const auto tr = run_scenario(steady(3600.0, 0.2));
    const double il = tail_mean(tr, tr.i_l, 0.02);
    const double delivered = p.e_src * il - il * il * p.r_series();
    CHECK(std::abs(delivered - 3600.0) / 3600.0 < 1e-3);
}

TEST_CASE("droop enable then reference restore") {
    Scenario s = steady(3600.0, 2.0);
    s.decimation = 10;
    s.events.push_back({0.1, action::SetDroop{DroopMode::vp, 60.0 / 3600.0}});
    s.events.push_back({0.3, action::SetVref{410.0}});
    const auto tr = run_scenario(s);
    CHECK(std::abs(window_mean(tr.t, tr.v_bus, 0.28, 0.3) - 290.0) < 0.5);
    CHECK(std::abs(tail_mean(tr, tr.v_bus, 0.05) - 350.0) < 0.5);
    const double rate = fit_ramp_rate(tr.t, tr.v_ref_eff, 0.4, 1.4);
    CHECK(rate == doctest::Approx(50.0).epsilon(1e-3));
}

TEST_CASE("current-reference events open and close the voltage loop") {
    Scenario s = steady(649.0, 4e-3);
    s.decimation = 1;
    s.events.push_back({0.0, action::SetCurrentRef{5.0}});
    s.events.push_back({1e-3, action::SetCurrentRef{10.0}});
    s.events.push_back({2e-3, action::ReleaseCurrentRef{}});
    const auto tr = run_scenario(s);
    CHECK(std::abs(window_mean(tr.t, tr.i_l, 0.9e-3, 1e-3) - 5.0) < 0.01);
    CHECK(std::abs(window_mean(tr.t, tr.i_l, 1.9e-3, 2e-3) - 10.0) < 0.05);
}

TEST_CASE("enable_droop and disable_droop") {
    Scenario s = steady(3600.0, 0.3);
    s.droop_mode = DroopMode::vp;
    s.droop_coef = 10.0 / 3600.0;
    s.events.push_back({0.05, action::DisableDroop{}});
    s.events.push_back({0.15, action::EnableDroop{}});
    const auto tr = run_scenario(s);
    CHECK(std::abs(tr.v_bus.front() - 340.0) < 0.5);
    CHECK(std::abs(window_mean(tr.t, tr.v_bus, 0.13, 0.15) - 350.0) < 0.5);
    CHECK(std::abs(tail_mean(tr, tr.v_bus, 0.02) - 340.0) < 0.5);
}

TEST_CASE("trace layout") {
    Scenario s = steady(1000.0, 0.01);
    s.decimation = 7;
    const auto tr = run_scenario(s);
    REQUIRE(tr.size() > 2);
    CHECK(tr.sample_dt == doctest::Approx(7e-6));
    for (std::size_t i = 1; i < tr.size(); ++i) {
        CHECK(tr.t[i] > tr.t[i - 1]);
        CHECK(tr.t[i] - tr.t[i - 1] == doctest::Approx(7e-6).epsilon(1e-6));
    }
    for (auto name : {"t", "v_bus", "v_c", "i_l", "i_line", "p_load", "duty", "v_ref_eff"})
        CHECK(tr.column(name).size() == tr.size());
    CHECK_THROWS_AS((void)tr.column("nope"), std::out_of_range);
}

TEST_CASE("staircase load ramp") {
    Scenario s = steady(1000.0, 0.5);
    s.events.push_back({0.1, action::RampLoadPower{1300.0, 1000.0, 100.0}});
    const auto tr = run_scenario(s);
    for (const double p : tr.p_load) CHECK(std::fmod(p, 100.0) == doctest::Approx(0.0));
    CHECK(tr.p_load.back() == 1300.0);
    CHECK(window_mean(tr.t, tr.p_load, 0.15, 0.19) == 1000.0);
    CHECK(window_mean(tr.t, tr.p_load, 0.21, 0.29) == 1100.0);
}

TEST_CASE("network topologies reach the algebraic steady state") {
    SUBCASE("line") {
        Scenario s = steady(3000.0, 0.2);
        s.network = {100e-6, 0.5, 200e-6};
        const auto tr = run_scenario(s);
        const double i = tail_mean(tr, tr.i_line, 0.02);
        CHECK(std::abs(tail_mean(tr, tr.v_c, 0.02) - 350.0) < 0.1);
        CHECK(std::abs(tail_mean(tr, tr.v_bus, 0.02) - (350.0 - 0.5 * i)) < 0.1);
    }
    SUBCASE("resistive link") {
        Scenario s = steady(3000.0, 0.2);
        s.network = {0.0, 0.5, 200e-6};
        const auto tr = run_scenario(s);
        const double v_bus = tail_mean(tr, tr.v_bus, 0.02);
        CHECK(v_bus * tail_mean(tr, tr.i_line, 0.02) == doctest::Approx(3000.0).epsilon(1e-3));
        CHECK(std::abs(v_bus - (350.0 - 0.5 * 3000.0 / v_bus)) < 0.1);
    }
}

TEST_CASE("scenario validation") {
    Scenario s;
    CHECK(validate(s).empty());

    s.dt = 1e-5;
    auto issues = validate(s);
    REQUIRE(issues.size() == 1);
    CHECK(issues.front().key == "dt");

    s = Scenario{};
    s.events = {{0.2, action::SetLoadPower{1.0}}, {0.1, action::SetLoadPower{2.0}}};
    issues = validate(s);
    REQUIRE(issues.size() == 1);
    CHECK(issues.front().key == "events[1]");

    s = Scenario{};
    s.network.r_line = 1.0;
    CHECK(validate(s).front().key == "r_line");

    s = Scenario{};
    s.network.l_line = 1e-3;
    CHECK(validate(s).front().key == "c_bus");

    s = Scenario{};
    s.params.f_i = 100.0;
    CHECK_THROWS_AS(run_scenario(s), std::invalid_argument);
}

TEST_CASE("empty event list simulates the initial condition") {
    Scenario s = steady(2000.0, 0.02);
    const auto tr = run_scenario(s);
    for (const double v : tr.v_bus) CHECK(std::abs(v - 350.0) < 1e-6);
}

TEST_CASE("SimulationDiverged carries the partial trace") {
    SimTrace partial;
    partial.t = {0.0, 1e-6};
    const SimulationDiverged e(2e-6, partial);
    CHECK(e.time() == 2e-6);
    CHECK(e.partial_trace().size() == 2);
}

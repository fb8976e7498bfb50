#include "cli.hpp"

#include "droopkit/config.hpp"
#include "droopkit/csv.hpp"
#include "droopkit/ident.hpp"
#include "droopkit/looptune.hpp"
#include "droopkit/stability.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace droopkit::cli {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v) { return format_number(v); }

std::string num(const std::optional<double>& v) { return v ? format_number(*v) : "none"; }

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError(0, "", "cannot open output file '" + path + "'");
    return f;
}

void print_margins(std::ostream& out, const std::string& prefix, const LoopMargins& m) {
    out << prefix << "crossover_hz=" << num(m.crossover_hz) << '\n'
        << prefix << "phase_margin_deg=" << num(m.phase_margin_deg) << '\n'
        << prefix << "gain_margin_db=" << num(m.gain_margin_db) << '\n'
        << prefix << "phase_crossover_hz=" << num(m.phase_crossover_hz) << '\n'
        << prefix << "multiple_crossovers=" << (m.multiple_crossovers ? "true" : "false") << '\n';
}

void print_tune(std::ostream& out, const std::string& prefix, const TuneReport& r) {
    out << prefix << "kp=" << num(r.gains.kp) << '\n'
        << prefix << "ki=" << num(r.gains.ki) << '\n'
        << prefix << "direction=" << (r.gains.direction == Direction::direct ? "direct" : "reverse") << '\n'
        << prefix << "target_f_hz=" << num(r.target_f) << '\n'
        << prefix << "target_pm_deg=" << num(r.target_pm) << '\n'
        << prefix << "exact=" << (r.exact ? "true" : "false") << '\n';
    print_margins(out, prefix, r.achieved);
}

void print_step(std::ostream& out, const std::string& prefix, const StepFit& f) {
    out << prefix << "t_step=" << num(f.t_step) << '\n'
        << prefix << "y0=" << num(f.y0) << '\n'
        << prefix << "y_inf=" << num(f.y_inf) << '\n'
        << prefix << "tau=" << num(f.tau) << '\n'
        << prefix << "bw_paper_hz=" << num(f.bw_paper) << '\n'
        << prefix << "bw_standard_hz=" << num(f.bw_standard) << '\n'
        << prefix << "tau_refined=" << num(f.tau_refined) << '\n'
        << prefix << "rms_residual=" << num(f.rms_residual) << '\n';
}

std::vector<double> parse_axis(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw UsageError("bad grid value '" + item + "'");
        }
        if (used != item.size() || !std::isfinite(v)) throw UsageError("bad grid value '" + item + "'");
        parts.push_back(v);
    }
    if (parts.size() == 1) return parts;
    if (parts.size() != 3) throw UsageError("grid axis must be <value> or <start>:<stop>:<count>");
    const double n = parts[2];
    if (n < 1 || n != std::floor(n) || n > 1e6) throw UsageError("grid count must be a positive integer");
    const auto count = static_cast<std::size_t>(n);
    if (count == 1) return {parts[0]};
    std::vector<double> axis(count);
    for (std::size_t i = 0; i < count; ++i)
        axis[i] = (parts[0] * static_cast<double>(count - 1 - i) + parts[1] * static_cast<double>(i)) /
                  static_cast<double>(count - 1);
    return axis;
}

void run_bode(const Scenario& sc, const std::string& loop, double f_lo, double f_hi, std::ostream& out) {
    const auto design = design_loops(sc.params, sc.design_power, kCurrentLoopPm, sc.pm_voltage);
    write_bode_csv(out, bode(loop == "current" ? design.tc : design.tv, f_lo, f_hi));
}

}  // namespace

SweepGrid parse_grid(const std::string& text, double l, double c, double k) {
    SweepGrid g{{l}, {c}, {k}};
    std::stringstream ss(text);
    std::string item;
    bool any = false;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("grid entries must be name=<value> or name=<start>:<stop>:<count>, got '" + item + "'");
        const auto name = item.substr(0, eq);
        auto axis = parse_axis(item.substr(eq + 1));
        if (name == "l") g.l = std::move(axis);
        else if (name == "c") g.c = std::move(axis);
        else if (name == "k") g.k = std::move(axis);
        else throw UsageError("unknown grid axis '" + name + "' (expected l, c or k)");
        any = true;
    }
    if (!any) throw UsageError("empty grid");
    return g;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Droop-controlled DC microgrid converter toolkit", "droopkit"};
    app.require_subcommand(1);
    app.fallthrough(false);

    std::string cfg_path, out_path, loop = "current", bode_out, measured, column, overlay, grid;
    double f_lo = 1.0, f_hi = 1e6, step_time = 0.0, settle = 0.0;
    std::optional<double> power;

    auto* bode_cmd = app.add_subcommand("bode", "Bode sweep of an assembled loop gain as CSV");
    bode_cmd->add_option("config", cfg_path, "Scenario file")->required();
    bode_cmd->add_option("--loop", loop, "current or voltage")->check(CLI::IsMember({"current", "voltage"}));
    bode_cmd->add_option("--out", out_path, "Output CSV")->required();
    bode_cmd->add_option("--f-lo", f_lo, "Lowest frequency [Hz]");
    bode_cmd->add_option("--f-hi", f_hi, "Highest frequency [Hz]");

    auto* tune_cmd = app.add_subcommand("tune", "Tune both PI loops and report margins");
    tune_cmd->add_option("config", cfg_path, "Scenario file")->required();
    tune_cmd->add_option("--bode-out", bode_out, "Also write the Bode CSV of the loop gain");
    tune_cmd->add_option("--loop", loop, "Loop for --bode-out")->check(CLI::IsMember({"current", "voltage"}));

    auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario and write the trace CSV");
    sim_cmd->add_option("config", cfg_path, "Scenario file")->required();
    sim_cmd->add_option("--out", out_path, "Output CSV")->required();

    auto* char_cmd = app.add_subcommand("characterize", "Fit step, droop and ramp characteristics");
    char_cmd->add_option("config", cfg_path, "Scenario file (simulate-then-fit)");
    char_cmd->add_option("--measured", measured, "Measured CSV with a t column");
    char_cmd->add_option("--step-time", step_time, "Step instant in the measured CSV [s]");
    char_cmd->add_option("--column", column, "Signal column to fit (default: first)");
    char_cmd->add_option("--settle-window", settle, "Settle window after the step [s]");
    char_cmd->add_option("--overlay", overlay, "Write measured vs fitted CSV");

    auto* stab_cmd = app.add_subcommand("stability", "Reduced-order CPL stability assessment");
    stab_cmd->add_option("config", cfg_path, "Scenario file")->required();
    stab_cmd->add_option("--power", power, "Load power to assess [W] (default: initial load)");

    auto* sweep_cmd = app.add_subcommand("sweep", "Instability power over an L/C/K grid");
    sweep_cmd->add_option("config", cfg_path, "Scenario file")->required();
    sweep_cmd->add_option("--grid", grid, "l=a:b:n,c=a:b:n,k=a:b:n")->required();
    sweep_cmd->add_option("--out", out_path, "Output CSV")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*bode_cmd) {
            if (!(f_lo > 0.0 && f_hi > f_lo)) throw UsageError("need 0 < --f-lo < --f-hi");
            const auto sc = load_config(cfg_path);
            auto f = open_out(out_path);
            run_bode(sc, loop, f_lo, f_hi, f);
        } else if (*tune_cmd) {
            const auto sc = load_config(cfg_path);
            const auto d = design_loops(sc.params, sc.design_power, kCurrentLoopPm, sc.pm_voltage);
            out << "op.duty=" << num(d.op.duty) << '\n'
                << "op.i_l=" << num(d.op.i_l) << '\n'
                << "op.v_out=" << num(d.op.v_out) << '\n'
                << "op.p_out=" << num(d.op.p_out) << '\n';
            print_tune(out, "current.", d.current);
            print_tune(out, "voltage.", d.voltage);
            const auto audit = check_hierarchy(sc.params);
            out << "hierarchy=" << (audit.passed() ? "ok" : "violated") << '\n';
            if (!bode_out.empty()) {
                auto f = open_out(bode_out);
                write_bode_csv(f, bode(loop == "current" ? d.tc : d.tv, f_lo, f_hi));
            }
        } else if (*sim_cmd) {
            const auto sc = load_config(cfg_path);
            SimTrace trace;
            int code = kExitOk;
            try {
                trace = run_scenario(sc);
            } catch (const SimulationDiverged& e) {
                err << "error: " << e.what() << '\n';
                trace = e.partial_trace();
                code = kExitDomain;
            }
            for (const auto& a : trace.annotations) err << "note: t=" << num(a.t) << ' ' << a.message << '\n';
            auto f = open_out(out_path);
            write_trace_csv(f, trace);
            return code;
        } else if (*char_cmd) {
            if (measured.empty() == cfg_path.empty())
                throw UsageError("characterize takes either a config file or --measured <csv>");
            if (!measured.empty()) {
                if (char_cmd->count("--step-time") == 0) throw UsageError("--measured requires --step-time");
                const auto m = read_measured_csv_file(measured);
                const auto name = column.empty() ? m.signal_names.front() : column;
                const auto it = m.signals.find(name);
                if (it == m.signals.end()) throw UsageError("no column '" + name + "' in " + measured);
                const double window = settle > 0.0 ? settle : m.t.back() - step_time;
                const auto fit = fit_time_constant(m.t, it->second, step_time, window);
                out << "column=" << name << '\n';
                print_step(out, "", fit);
                if (!overlay.empty()) {
                    auto f = open_out(overlay);
                    write_overlay_csv(f, m.t, it->second, fit, window);
                }
            } else {
                if (!overlay.empty() || char_cmd->count("--step-time") || !column.empty())
                    throw UsageError("--overlay, --step-time and --column apply to --measured only");
                const auto sc = load_config(cfg_path);
                const auto rep = characterize_model(sc.params);
                print_step(out, "current_loop.", rep.current_loop);
                print_step(out, "droop_lpf.", rep.droop_lpf);
                for (const auto& p : rep.droop_sweep)
                    out << "droop_sweep.v_at_" << num(p.x) << "=" << num(p.v) << '\n';
                out << "droop.slope=" << num(rep.droop.slope) << '\n'
                    << "droop.intercept=" << num(rep.droop.intercept) << '\n'
                    << "droop.r_squared=" << num(rep.droop.r_squared) << '\n'
                    << "ramp_rate=" << num(rep.ramp_rate) << '\n'
                    << "restore_time=" << num(rep.restore_time) << '\n';
            }
        } else if (*stab_cmd) {
            const auto sc = load_config(cfg_path);
            if (!(sc.network.l_line > 0.0 && sc.network.c_bus > 0.0))
                throw ConfigError(0, "network", "stability needs a [network] with l_line > 0 and c_bus > 0");
            const double p = power.value_or(sc.p_load);
            if (!(p > 0.0)) throw UsageError("assessment power must be positive (set p_load or --power)");
            const auto a = assess_stability(sc.params, sc.network.l_line, sc.network.c_bus, sc.params.k_vi, p);
            out << "l=" << num(sc.network.l_line) << '\n'
                << "c=" << num(sc.network.c_bus) << '\n'
                << "k=" << num(sc.params.k_vi) << '\n'
                << "p=" << num(a.p) << '\n'
                << "v=" << num(a.v) << '\n'
                << "re=" << num(a.re) << '\n'
                << "c_min=" << num(a.c_min) << '\n'
                << "l_max=" << num(a.l_max) << '\n'
                << "margin=" << num(a.margin) << '\n'
                << "stable=" << (a.stable ? "true" : "false") << '\n'
                << "p_crit=" << num(a.p_crit) << '\n';
        } else if (*sweep_cmd) {
            const auto sc = load_config(cfg_path);
            const auto g = parse_grid(grid, sc.network.l_line, sc.network.c_bus, sc.params.k_vi);
            const DroopLaw law{sc.params.v_nl, sc.params.k_vp};
            auto f = open_out(out_path);
            f << "l,c,k,p_crit,stable\n";
            for (const double l : g.l)
                for (const double c : g.c)
                    for (const double k : g.k) {
                        const auto pred = predict_instability_power(law, l, c, k);
                        const bool stable = !pred.p_crit || sc.p_load < *pred.p_crit;
                        f << num(l) << ',' << num(c) << ',' << num(k) << ',' << num(pred.p_crit) << ','
                          << (stable ? "true" : "false") << '\n';
                    }
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    return kExitOk;
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace droopkit::cli

#include "droopkit/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace droopkit {

std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
    os << kTraceHeader << '\n';
    for (std::size_t i = 0; i < trace.size(); ++i) {
        os << format_number(trace.t[i]) << ',' << format_number(trace.v_bus[i]) << ','
           << format_number(trace.v_c[i]) << ',' << format_number(trace.i_l[i]) << ','
           << format_number(trace.i_line[i]) << ',' << format_number(trace.p_load[i]) << ','
           << format_number(trace.duty[i]) << ',' << format_number(trace.v_ref_eff[i]) << '\n';
    }
}

void write_bode_csv(std::ostream& os, const std::vector<FrequencyPoint>& sweep) {
    os << kBodeHeader << '\n';
    for (const auto& p : sweep)
        os << format_number(p.f) << ',' << format_number(p.magnitude_db) << ','
           << format_number(p.phase_deg) << '\n';
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

MeasuredTrace read_measured_csv(std::istream& is) {
    MeasuredTrace out;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        header = split_row(line);
        break;
    }
    if (header.empty()) throw ConfigError(line_no, "t", "measured CSV is empty");

    std::size_t t_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "t") t_col = i;
        else out.signal_names.push_back(header[i]);
    }
    if (t_col == header.size()) throw ConfigError(line_no, "t", "measured CSV has no 't' column");
    if (out.signal_names.empty()) throw ConfigError(line_no, "", "measured CSV has no signal column");
    for (const auto& name : out.signal_names) {
        if (name.empty()) throw ConfigError(line_no, "", "empty column name");
        if (out.signals.count(name)) throw ConfigError(line_no, name, "duplicate column '" + name + "'");
        out.signals[name];
    }

    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_row(line);
        if (cells.size() != header.size())
            throw ConfigError(line_no, "", "row has " + std::to_string(cells.size()) + " cells, header has " +
                                               std::to_string(header.size()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            double v = 0.0;
            const auto& c = cells[i];
            const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (c.empty() || ec != std::errc{} || ptr != c.data() + c.size() || !std::isfinite(v))
                throw ConfigError(line_no, header[i], "bad number '" + c + "' in column '" + header[i] + "'");
            if (i == t_col) out.t.push_back(v);
            else out.signals[header[i]].push_back(v);
        }
        if (out.t.size() > 1 && !(out.t.back() > out.t[out.t.size() - 2]))
            throw ConfigError(line_no, "t", "time column must be strictly increasing");
    }
    return out;
}

MeasuredTrace read_measured_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "", "cannot open measured CSV '" + path + "'");
    return read_measured_csv(in);
}

void write_overlay_csv(std::ostream& os, std::span<const double> t, std::span<const double> y,
                       const StepFit& fit, double settle_window) {
    os << "t,measured,fitted\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < fit.t_step - settle_window || t[i] > fit.t_step + settle_window) continue;
        const double dt = t[i] - fit.t_step;
        const double fitted = dt < 0.0 ? fit.y0 : fit.y_inf + (fit.y0 - fit.y_inf) * std::exp(-dt / fit.tau);
        os << format_number(t[i]) << ',' << format_number(y[i]) << ',' << format_number(fitted) << '\n';
    }
}

}  // namespace droopkit

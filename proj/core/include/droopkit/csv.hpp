#pragma once

// CSV emission for traces, Bode sweeps and fit overlays, and a reader for
// measured step records. Numbers are written in shortest round-trip form so
// identical inputs give byte-identical files.

#include "droopkit/ident.hpp"
#include "droopkit/simcore.hpp"
#include "droopkit/transfer_function.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace droopkit {

std::string format_number(double v);

void write_trace_csv(std::ostream& os, const SimTrace& trace);

inline constexpr std::string_view kBodeHeader = "f_hz,mag_db,phase_deg";
void write_bode_csv(std::ostream& os, const std::vector<FrequencyPoint>& sweep);

/// A measurement export: a `t` column plus one or more signal columns.
struct MeasuredTrace {
    std::vector<double> t;
    std::vector<std::string> signal_names;  ///< file order, `t` excluded
    std::map<std::string, std::vector<double>> signals;
};

/// Parses a header row and numeric rows. Throws ConfigError (with the line)
/// on a missing `t` column, no signal column, ragged rows or bad numbers.
MeasuredTrace read_measured_csv(std::istream& is);
MeasuredTrace read_measured_csv_file(const std::string& path);

/// Columns t,measured,fitted over [t_step - settle, t_step + settle], the
/// fitted curve being the first-order step implied by fit.
void write_overlay_csv(std::ostream& os, std::span<const double> t, std::span<const double> y,
                       const StepFit& fit, double settle_window);

}  // namespace droopkit

#pragma once

// Flat INI-style scenario files.
//
//   # comment
//   [converter]          every ConverterParams field, required
//   v_nl = 350
//   ...
//   [network]            optional: l_line, r_line, c_bus (default 0)
//   [sim]                dt and t_end required; decimation, p_load, v_ref,
//                        droop_mode, droop_coef, i_max, v_min,
//                        design_power, pm_voltage optional
//   [events]             one event per line, time-ordered:
//   t=1.0 action=set_droop mode=vp coef=0.016667
//
// Event actions and their arguments:
//   set_load_power p=<W>
//   ramp_load_power target=<W> rate=<W/s> [step=<W>]
//   set_droop mode=<none|vp|vi> coef=<V/W or ohm>
//   set_vref v=<V>
//   enable_droop | disable_droop
//   set_current_ref i=<A> | release_current_ref
//
// All values are plain SI numbers. Unknown sections, keys or event
// arguments are errors.

#include "droopkit/simcore.hpp"

#include <string>
#include <string_view>

namespace droopkit {

/// Parses and validates a scenario file. Every failure is a ConfigError
/// carrying the offending key and, where one exists, its line number.
Scenario parse_config(std::string_view text);

/// Reads and parses a file; I/O failures are ConfigErrors too.
Scenario load_config(const std::string& path);

/// Canonical text form. parse_config(serialize_config(s)) == s.
std::string serialize_config(const Scenario& s);

}  // namespace droopkit

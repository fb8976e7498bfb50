#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace droopkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. args excludes the program name. Data goes to out,
/// diagnostics to err.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, char** argv);

/// Parses "l=a:b:n,c=a:b:n,k=a:b:n" into linearly spaced axes. Axes not
/// named keep the single value passed in.
struct SweepGrid {
    std::vector<double> l, c, k;
};
SweepGrid parse_grid(const std::string& text, double l, double c, double k);

}  // namespace droopkit::cli

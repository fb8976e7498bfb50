#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace testsupport {

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double rel_err(std::complex<double> a, std::complex<double> b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline std::string config_path(const std::string& name) { return std::string(DROOPKIT_CONFIG_DIR) + "/" + name; }

}  // namespace testsupport

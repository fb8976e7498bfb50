#pragma once

// Continuous-time SISO rational transfer functions and their frequency
// response.
//
// Coefficient convention (used everywhere in droopkit): polynomials are
// stored highest power of s first, so {a, b, c} means a*s^2 + b*s + c.

#include <complex>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace droopkit {

using Polynomial = std::vector<double>;

class TransferFunction {
public:
    /// Builds num(s)/den(s). Leading zeros are trimmed, common factors of s
    /// are cancelled and both polynomials are scaled so the denominator is
    /// monic. Throws ConstructionError when den is identically zero.
    TransferFunction(Polynomial num, Polynomial den);

    static TransferFunction unity() { return TransferFunction({1.0}, {1.0}); }
    static TransferFunction gain(double k) { return TransferFunction({k}, {1.0}); }

    const Polynomial& num() const noexcept { return num_; }
    const Polynomial& den() const noexcept { return den_; }

    /// Value at an arbitrary complex s. Throws PoleEvaluationError when s is
    /// (numerically) a root of the denominator.
    std::complex<double> operator()(std::complex<double> s) const;

    /// Value at s = j*2*pi*f.
    std::complex<double> at_hz(double f_hz) const;

    bool is_zero() const noexcept { return num_.size() == 1 && num_[0] == 0.0; }

    friend bool operator==(const TransferFunction&, const TransferFunction&) = default;

private:
    Polynomial num_;
    Polynomial den_;
};

std::ostream& operator<<(std::ostream& os, const TransferFunction& tf);

TransferFunction make_tf(Polynomial num, Polynomial den);

/// Horner evaluation of a highest-first polynomial.
std::complex<double> polyval(std::span<const double> p, std::complex<double> s);
Polynomial polymul(std::span<const double> a, std::span<const double> b);
Polynomial polyadd(std::span<const double> a, std::span<const double> b);

struct FrequencyPoint {
    double f = 0.0;
    double magnitude = 0.0;
    double magnitude_db = 0.0;
    double phase_deg = 0.0;
};

/// Single-frequency response. The phase is the principal value in (-180, 180].
FrequencyPoint eval_freq(const TransferFunction& tf, double f_hz);

/// Logarithmic sweep from f_lo to f_hi inclusive. Phase is unwrapped
/// continuously along the sweep starting from the principal value at f_lo.
std::vector<FrequencyPoint> bode(const TransferFunction& tf, double f_lo, double f_hi,
                                 int points_per_decade = 200);

TransferFunction series(const TransferFunction& a, const TransferFunction& b);

/// t / (1 + t). Throws DegenerateFeedbackError when 1 + t is identically zero.
TransferFunction close_unity_feedback(const TransferFunction& t);

struct LoopMargins {
    double crossover_hz = 0.0;
    double phase_margin_deg = 0.0;
    /// nullopt means no phase crossover inside the searched band.
    std::optional<double> gain_margin_db;
    double phase_crossover_hz = 0.0;
    /// Set when |t| crosses unity more than once in the band; crossover_hz
    /// is then the lowest one.
    bool multiple_crossovers = false;
};

/// Gain crossover via a 200 point/decade log grid followed by bisection in
/// log-frequency. Throws NoCrossoverError when |t| never crosses 1.
LoopMargins margins(const TransferFunction& t, double f_lo, double f_hi);

/// Wraps an angle in degrees into (-180, 180].
double wrap_deg(double deg);

}  // namespace droopkit

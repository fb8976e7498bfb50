#include "droopkit/transfer_function.hpp"

#include "droopkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

namespace droopkit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void trim_leading_zeros(Polynomial& p) {
    auto first = std::find_if(p.begin(), p.end(), [](double c) { return c != 0.0; });
    p.erase(p.begin(), first);
}

std::size_t trailing_zeros(const Polynomial& p) {
    std::size_t n = 0;
    for (auto it = p.rbegin(); it != p.rend() && *it == 0.0; ++it) ++n;
    return n;
}

double log_mag(const TransferFunction& t, double f) { return std::log(std::abs(t.at_hz(f))); }

}  // namespace

PoleEvaluationError::PoleEvaluationError(double f_hz)
    : Error([&] {
          std::ostringstream os;
          os << "transfer function evaluated at a pole (f = " << f_hz << " Hz)";
          return os.str();
      }()),
      f_hz_(f_hz) {}

ConfigError::ConfigError(std::size_t line, std::string key, const std::string& what)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line),
      key_(std::move(key)) {}

TransferFunction::TransferFunction(Polynomial num, Polynomial den)
    : num_(std::move(num)), den_(std::move(den)) {
    trim_leading_zeros(den_);
    if (den_.empty()) throw ConstructionError("transfer function denominator is identically zero");
    trim_leading_zeros(num_);
    if (num_.empty()) {
        num_ = {0.0};
        den_ = {1.0};
        return;
    }
    // Exact cancellation of common s^k factors only.
    const std::size_t common = std::min(trailing_zeros(num_), trailing_zeros(den_));
    num_.resize(num_.size() - common);
    den_.resize(den_.size() - common);

    const double lead = den_.front();
    for (double& c : num_) c /= lead;
    for (double& c : den_) c /= lead;
}

std::complex<double> polyval(std::span<const double> p, std::complex<double> s) {
    std::complex<double> acc{0.0, 0.0};
    for (double c : p) acc = acc * s + c;
    return acc;
}

Polynomial polymul(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {};
    Polynomial out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

Polynomial polyadd(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::max(a.size(), b.size());
    Polynomial out(n, 0.0);
    std::copy(a.begin(), a.end(), out.begin() + static_cast<std::ptrdiff_t>(n - a.size()));
    for (std::size_t i = 0; i < b.size(); ++i) out[n - b.size() + i] += b[i];
    return out;
}

std::complex<double> TransferFunction::operator()(std::complex<double> s) const {
    const auto d = polyval(den_, s);
    // Scale of the denominator terms at |s|, used as the "numerically zero"
    // reference for pole detection.
    double scale = 0.0;
    const double r = std::abs(s);
    for (double c : den_) scale = scale * r + std::abs(c);
    if (std::abs(d) <= 1e-13 * scale) throw PoleEvaluationError(s.imag() / kTwoPi);
    return polyval(num_, s) / d;
}

std::complex<double> TransferFunction::at_hz(double f_hz) const {
    return (*this)({0.0, kTwoPi * f_hz});
}

std::ostream& operator<<(std::ostream& os, const TransferFunction& tf) {
    auto put = [&](const Polynomial& p) {
        os << '[';
        for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
        os << ']';
    };
    put(tf.num());
    os << " / ";
    put(tf.den());
    return os;
}

TransferFunction make_tf(Polynomial num, Polynomial den) {
    return TransferFunction(std::move(num), std::move(den));
}

double wrap_deg(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w <= -180.0) w += 360.0;
    if (w > 180.0) w -= 360.0;
    return w;
}

FrequencyPoint eval_freq(const TransferFunction& tf, double f_hz) {
    if (!(f_hz > 0.0)) throw std::invalid_argument("eval_freq: frequency must be positive");
    const auto v = tf.at_hz(f_hz);
    FrequencyPoint pt;
    pt.f = f_hz;
    pt.magnitude = std::abs(v);
    pt.magnitude_db = 20.0 * std::log10(pt.magnitude);
    pt.phase_deg = std::arg(v) * kRadToDeg;
    return pt;
}

std::vector<FrequencyPoint> bode(const TransferFunction& tf, double f_lo, double f_hi,
                                 int points_per_decade) {
    if (!(f_lo > 0.0) || !(f_hi > f_lo) || points_per_decade < 1)
        throw std::invalid_argument("bode: need 0 < f_lo < f_hi and points_per_decade >= 1");
    const double decades = std::log10(f_hi / f_lo);
    const auto n = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::ceil(decades * points_per_decade - 1e-9)) + 1);
    std::vector<FrequencyPoint> out;
    out.reserve(n);
    double prev_wrapped = 0.0;
    double offset = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = (i + 1 == n) ? f_hi
                                      : f_lo * std::pow(10.0, static_cast<double>(i) / points_per_decade);
        auto pt = eval_freq(tf, f);
        if (i > 0) {
            const double jump = pt.phase_deg - prev_wrapped;
            if (jump > 180.0) offset -= 360.0;
            else if (jump < -180.0) offset += 360.0;
        }
        prev_wrapped = pt.phase_deg;
        pt.phase_deg += offset;
        out.push_back(pt);
    }
    return out;
}

TransferFunction series(const TransferFunction& a, const TransferFunction& b) {
    return TransferFunction(polymul(a.num(), b.num()), polymul(a.den(), b.den()));
}

TransferFunction close_unity_feedback(const TransferFunction& t) {
    auto den = polyadd(t.den(), t.num());
    if (std::all_of(den.begin(), den.end(), [](double c) { return c == 0.0; }))
        throw DegenerateFeedbackError("1 + T(s) is identically zero");
    return TransferFunction(t.num(), std::move(den));
}

LoopMargins margins(const TransferFunction& t, double f_lo, double f_hi) {
    if (!(f_lo > 0.0) || !(f_hi > f_lo)) throw std::invalid_argument("margins: need 0 < f_lo < f_hi");
    const auto sweep = bode(t, f_lo, f_hi, 200);

    auto bisect = [&](double a, double b, auto&& g) {
        // g changes sign on [a, b]; bisection in log-frequency.
        double la = std::log(a), lb = std::log(b);
        double ga = g(a);
        for (int it = 0; it < 200 && (lb - la) > 1e-13; ++it) {
            const double lm = 0.5 * (la + lb);
            const double gm = g(std::exp(lm));
            if ((gm > 0.0) == (ga > 0.0)) {
                la = lm;
                ga = gm;
            } else {
                lb = lm;
            }
        }
        return std::exp(0.5 * (la + lb));
    };

    LoopMargins m;
    int crossings = 0;
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        const bool above_prev = sweep[i - 1].magnitude > 1.0;
        const bool above_cur = sweep[i].magnitude > 1.0;
        if (above_prev == above_cur) continue;
        ++crossings;
        if (crossings == 1) {
            m.crossover_hz = bisect(sweep[i - 1].f, sweep[i].f, [&](double f) { return log_mag(t, f); });
        }
    }
    if (crossings == 0) throw NoCrossoverError("|T| does not cross unity in the searched band");
    m.multiple_crossovers = crossings > 1;
    m.phase_margin_deg = wrap_deg(180.0 + std::arg(t.at_hz(m.crossover_hz)) * kRadToDeg);

    // Phase crossovers: the unwrapped phase passes through -180 + 360k.
    auto branch = [](double phase) { return std::floor((phase + 180.0) / 360.0); };
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        const double k0 = branch(sweep[i - 1].phase_deg);
        const double k1 = branch(sweep[i].phase_deg);
        if (k0 == k1) continue;
        const double target = -180.0 + 360.0 * std::max(k0, k1);
        const double base = sweep[i - 1].phase_deg - wrap_deg(sweep[i - 1].phase_deg);
        const double f_pc = bisect(sweep[i - 1].f, sweep[i].f, [&](double f) {
            // Continuous phase near this grid interval.
            double ph = wrap_deg(std::arg(t.at_hz(f)) * kRadToDeg) + base;
            if (ph - sweep[i - 1].phase_deg > 180.0) ph -= 360.0;
            if (ph - sweep[i - 1].phase_deg < -180.0) ph += 360.0;
            return ph - target;
        });
        const double gm = -20.0 * std::log10(std::abs(t.at_hz(f_pc)));
        if (!m.gain_margin_db || gm < *m.gain_margin_db) {
            m.gain_margin_db = gm;
            m.phase_crossover_hz = f_pc;
        }
    }
    return m;
}

}  // namespace droopkit

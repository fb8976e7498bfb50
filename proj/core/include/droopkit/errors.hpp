#pragma once

#include <stdexcept>
#include <string>

namespace droopkit {

/// One failed invariant. `key` names the offending field ("f_v",
/// "events[2]", ...) so front ends can point at the source line.
struct ValidationIssue {
    std::string key;
    std::string message;
};

/// Base class for every domain failure raised by the library. The CLI maps
/// these onto exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConstructionError : public Error {
public:
    using Error::Error;
};

class PoleEvaluationError : public Error {
public:
    explicit PoleEvaluationError(double f_hz);
    double frequency() const noexcept { return f_hz_; }

private:
    double f_hz_;
};

class NoCrossoverError : public Error {
public:
    using Error::Error;
};

class DegenerateFeedbackError : public Error {
public:
    using Error::Error;
};

class InfeasibleOperatingPoint : public Error {
public:
    using Error::Error;
};

class UntunableError : public Error {
public:
    using Error::Error;
};

class NoStepError : public Error {
public:
    using Error::Error;
};

class NonFirstOrderError : public Error {
public:
    using Error::Error;
};

class RankDeficientError : public Error {
public:
    using Error::Error;
};

class ShortWindowError : public Error {
public:
    using Error::Error;
};

/// Configuration text failed validation. `line()` is 0 when the problem is
/// not tied to a single line (a missing required key, for example).
class ConfigError : public Error {
public:
    ConfigError(std::size_t line, std::string key, const std::string& what);
    std::size_t line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

}  // namespace droopkit

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eestim {

// Malformed arguments: wrong dimensions, bad encodings, out-of-range sites.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Estimator or experiment configuration that violates its own invariants.
class InvalidConfig : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Enumeration requested on a system beyond the oracle cap.
class SizeError : public std::length_error {
public:
    using std::length_error::length_error;
};

// A parameter ran past the divergence guard during estimation.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t parameter, double value, const std::string& what)
        : std::runtime_error(what), parameter_(parameter), value_(value) {}

    std::size_t parameter() const noexcept { return parameter_; }
    double value() const noexcept { return value_; }

private:
    std::size_t parameter_;
    double value_;
};

// The target statistics lie on the boundary of the achievable set, so no
// maximum likelihood estimate exists.
class NonexistenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace eestim

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace symmflow {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Syntax error from the expression front-end; `position` is a byte offset.
struct ParseError : Error {
    std::size_t position;
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
};

/// Expression lies outside the canonical fragment; carries the offending subtree.
struct NotCanonical : Error {
    std::string offending;
    explicit NotCanonical(const std::string& what_part)
        : Error("not canonical: " + what_part), offending(what_part) {}
};

/// Product of two coefficient forms that both carry unknowns.
struct NonlinearUnknowns : Error {
    NonlinearUnknowns() : Error("product of two unknown-bearing coefficients") {}
};

struct InconsistentSystem : Error {
    std::string certificate;
    explicit InconsistentSystem(const std::string& row)
        : Error("inconsistent linear system: " + row), certificate(row) {}
};

struct NoSolutionInAnsatz : Error {
    NoSolutionInAnsatz() : Error("no solution within the given ansatz basis") {}
};

struct NotAffineInY : Error {
    NotAffineInY() : Error("characteristic is not of the form y - h(x)") {}
};

struct UnsupportedRoots : Error {
    explicit UnsupportedRoots(const std::string& detail)
        : Error("characteristic roots outside {0, +-i*m}: " + detail) {}
};

struct UnderdeterminedSystem : Error {
    explicit UnderdeterminedSystem(const std::string& detail)
        : Error("underdetermined constant fit: " + detail) {}
};

struct IntegrationError : Error {
    using Error::Error;
};

struct StepSizeUnderflow : IntegrationError {
    explicit StepSizeUnderflow(double x)
        : IntegrationError("step size underflow near x = " + std::to_string(x)) {}
};

struct NonFiniteState : IntegrationError {
    explicit NonFiniteState(double x)
        : IntegrationError("non-finite state near x = " + std::to_string(x)) {}
};

/// Numeric evaluation outside the domain (sqrt of negative, division by zero,
/// missing environment entry).
struct EvalError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace symmflow

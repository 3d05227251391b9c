#pragma once

#include <stdexcept>
#include <string>

namespace cgs {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };
struct IterationError : Error { using Error::Error; };
struct PositivityError : Error { using Error::Error; };
struct BracketError : Error { using Error::Error; };
struct IntegrationError : Error { using Error::Error; };
struct ResolutionError : Error { using Error::Error; };
struct QuadratureError : Error { using Error::Error; };
struct DegeneracyError : Error { using Error::Error; };

// Singular or non-finite linear solve; carries the shift that caused it.
struct ConditioningError : Error {
    ConditioningError(const std::string& what, double shift)
        : Error(what + " (s = " + std::to_string(shift) + ")"), s(shift) {}
    double s;
};

} // namespace cgs

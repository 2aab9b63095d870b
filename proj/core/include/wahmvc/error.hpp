#pragma once

#include <stdexcept>
#include <string>

namespace wahmvc {

// Input shapes that do not agree (vector lengths, matrix dims, view counts).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Invalid configuration or precondition on scalar parameters.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or unreadable files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation
// (off-manifold point, timelike tangent vector, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Non-finite values produced during computation.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Object used in the wrong order, e.g. backward() before forward().
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace wahmvc

#pragma once

#include <stdexcept>
#include <string>

namespace warmmem {

/// Argument outside the domain of an operation (bad population, non-positive
/// saturation power, invalid spin quantum number, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Conversion between two units that are not related by the supported set.
class UnitError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base class for failures inside the Maxwell-Bloch solver.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A complex detuning Γ = γ − iΔ vanished, so the propagation coefficients are infinite.
class SingularDetuningError : public SolverError {
public:
    using SolverError::SolverError;
};

/// The τ grid does not resolve the control pulse.
class ResolutionError : public SolverError {
public:
    using SolverError::SolverError;
};

/// Least-squares failures that are not plain non-convergence.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (config or CSV); the message names the row/field.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace warmmem

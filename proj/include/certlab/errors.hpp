#pragma once

#include <stdexcept>
#include <string>

namespace certlab {

// Configuration / input-contract violations (CLI maps these to exit code 2).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Base class for runtime numerical failures (CLI maps these to exit code 3).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by solve_spd and friends when the matrix is numerically singular.
// Carries the min-eigenvalue estimate that triggered the rejection.
class SingularMatrixError : public NumericalError {
public:
    SingularMatrixError(const std::string& what, double min_eigenvalue)
        : NumericalError(what), min_eigenvalue_(min_eigenvalue) {}
    double min_eigenvalue() const { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

// Objective diverging to -inf (or iterates blowing up) in a solve.
class UnboundedError : public NumericalError {
public:
    explicit UnboundedError(const std::string& what) : NumericalError(what) {}
};

// Requested combinatorial enumeration exceeds the exact-enumeration budget.
class BudgetError : public NumericalError {
public:
    explicit BudgetError(const std::string& what) : NumericalError(what) {}
};

// Norm descriptor not supported by the requested closed-form computation.
class UnsupportedNormError : public std::invalid_argument {
public:
    explicit UnsupportedNormError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace certlab

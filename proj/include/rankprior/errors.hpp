#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rankprior {

// Bad input: empty data, out-of-range parameter, malformed file.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An operation is undefined at the requested point (zero density, improper
// prior asked for a quantile, discrete prior asked for lambda_rate).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Quadrature or root finding failed to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A loss integral is infinite for the requested pair of priors.
class DivergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// A hyperparameter fit could not locate its root. Carries the closed-form
// approximation so callers can fall back to it.
class EstimationError : public NumericalError {
public:
    EstimationError(const std::string& what, double approximation)
        : NumericalError(what), approximation_(approximation) {}

    double approximation() const noexcept { return approximation_; }

private:
    double approximation_;
};

// Wraps an error raised while scoring one unit of a dataset.
class UnitError : public NumericalError {
public:
    UnitError(std::size_t index, const std::string& what)
        : NumericalError("unit " + std::to_string(index) + ": " + what), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

}  // namespace rankprior

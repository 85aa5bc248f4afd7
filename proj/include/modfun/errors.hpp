#pragma once

#include <stdexcept>
#include <string>

namespace modfun {

// Bad arguments: dimensions, step sizes, preconditions. The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The inputs were well-formed but the numerics could not deliver. Exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class HorizonNotFilled : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class CflViolation : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SupportViolation : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NotNullControllable : public NumericalError {
public:
    NotNullControllable(double smallest_eigenvalue, double largest_eigenvalue)
        : NumericalError("not null-controllable at tolerance: Gramian eigenvalues in [" +
                         std::to_string(smallest_eigenvalue) + ", " +
                         std::to_string(largest_eigenvalue) + "]"),
          smallest_eigenvalue_(smallest_eigenvalue),
          largest_eigenvalue_(largest_eigenvalue) {}

    double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }
    double largest_eigenvalue() const noexcept { return largest_eigenvalue_; }

private:
    double smallest_eigenvalue_;
    double largest_eigenvalue_;
};

class AlgebraicLoopError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace modfun

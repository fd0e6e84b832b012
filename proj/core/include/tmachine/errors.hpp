#pragma once

#include <stdexcept>
#include <string>

namespace tmachine {

// Base for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: malformed files, out-of-range parameters, violated preconditions.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A size guard refused the request (dense matrix or oracle lattice too large).
class GuardError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Numerical failure: non-convergence, all-degenerate weights, event cap hit.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace tmachine

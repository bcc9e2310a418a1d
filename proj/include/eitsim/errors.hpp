#pragma once

#include <stdexcept>
#include <string>

namespace eit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad parameters, malformed config or malformed input data.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Adaptive Doppler quadrature ran out of its node budget.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double achieved_tolerance)
        : Error(what), achieved_tolerance_(achieved_tolerance) {}
    double achieved_tolerance() const noexcept { return achieved_tolerance_; }

private:
    double achieved_tolerance_;
};

/// Numerical failure during a computation (non-finite values, wraparound).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The pulse output peak landed near the edge of the periodic time window.
class WraparoundError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A fit model returned a non-finite prediction.
class EvaluationError : public Error {
public:
    using Error::Error;
};

}  // namespace eit

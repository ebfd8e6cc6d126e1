#pragma once

#include <stdexcept>
#include <string>

namespace lowrank {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension mismatch between matrices, vectors, or operators.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid argument value (out-of-range sample count, zero-norm reference, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Operation on an object in the wrong state (e.g. unresolved auto schedule).
class StateError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what, long line = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_ = 0;
};

/// File system failure (open, write, rename).
class IoError : public Error {
public:
    using Error::Error;
};

/// Numerical failure, e.g. a factorization that did not converge.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, int iteration = -1)
        : Error(what), iteration_(iteration) {}

    /// Solver iteration at which the failure occurred, or -1 outside a solve.
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_ = -1;
};

/// Iterate blow-up detected by a solver's divergence guard.
class DivergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace lowrank

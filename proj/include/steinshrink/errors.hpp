#pragma once

#include <stdexcept>
#include <string>

namespace steinshrink {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: wrong shape, non-symmetric, negative where nonnegative required.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A matrix has lower numerical rank than the operation needs.
class RankError : public Error {
public:
    using Error::Error;
};

/// Leading q x q block of a sample matrix is numerically singular.
class LeadingBlockError : public RankError {
public:
    using RankError::RankError;
};

/// Complex or negative eigenvalue where a positive real spectrum was expected.
class SpectrumError : public Error {
public:
    using Error::Error;
};

/// Estimator or experiment parameters violate a precondition.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Repeated draw failures in the random-matrix layer.
class SimulationError : public Error {
public:
    using Error::Error;
};

}  // namespace steinshrink

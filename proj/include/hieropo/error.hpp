#pragma once

#include <stdexcept>
#include <string>

namespace hieropo {

/// Inconsistent or invalid model/configuration parameters.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input files. The message carries the path and line when known.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A factorization failed where the math says it should not (corrupted covariance).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The dense joint-Gaussian oracle refuses problems above its size guard.
class OracleScaleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hieropo

#pragma once

#include <stdexcept>
#include <string>

namespace skillgp {

/// Invalid configuration: bad kernel or likelihood parameters, malformed
/// JSON, unknown fields, out-of-scope model structure.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (rows, outcomes, timestamps).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown, e.g. a non-finite filter covariance or quadrature result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace skillgp

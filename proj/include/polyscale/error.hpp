#pragma once

#include <stdexcept>
#include <string>

namespace polyscale {

/// Bad flags, unreadable or inconsistent configuration files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violating a documented contract (unmapped codes, malformed rows,
/// zero variance, degenerate items).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter file does not match the model or fails validation.
class ParameterError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace polyscale

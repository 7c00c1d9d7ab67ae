#pragma once

#include <stdexcept>
#include <string>

namespace narx {

// Error categories map onto CLI exit codes: ConfigError -> 1,
// DataError -> 2, NumericError -> 3.

/// Bad configuration, usage, or argument values.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data (CSV schema, labels, dimensions).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (non-finite values, degenerate systems).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace narx

#pragma once

#include <stdexcept>
#include <string>

namespace nutripred {

/// Raised for malformed or inconsistent input data (CSV contents, labels,
/// range violations). Maps to CLI exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for invalid configuration or usage (bad JSON config, parameter
/// ranges, schema mismatches). Maps to CLI exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace nutripred

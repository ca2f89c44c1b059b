#pragma once

#include <stdexcept>
#include <string>

namespace spinmarket {

/// Invalid parameters or configuration input. The CLI maps this to exit code 1.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or unusable data (bad CSV, degenerate series, I/O failure).
/// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spinmarket

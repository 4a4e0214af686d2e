#pragma once

#include <stdexcept>
#include <string>

namespace ile {

// Operand shapes incompatible with the requested operation.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// A primitive produced (or was handed) a NaN/Inf value.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// A factorization hit a zero pivot / rank-deficient system.
struct SingularityError : std::runtime_error {
    explicit SingularityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid or missing configuration value.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file contents (bad magic, version, truncation).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failure.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ile

#pragma once

#include <stdexcept>
#include <string>

namespace chisq {

// Bad user-supplied configuration (dims, alpha, learning rate, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible matrix/vector dimensions.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid data content (non-one-hot label, count mismatch, empty input, ...).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf or other numeric breakdown.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// File missing, truncated, or wrong format.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace chisq

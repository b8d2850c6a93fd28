#pragma once

#include <stdexcept>
#include <string>

namespace dfl {

// Error taxonomy mirrored by the CLI exit codes:
// config/validation -> 2, I/O -> 3, numerical failure -> 4.
// Argument-level precondition violations throw std::invalid_argument.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dfl

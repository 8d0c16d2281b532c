#pragma once

#include <stdexcept>
#include <string>

namespace ybcav {

/// Invalid configuration or violated model invariant. CLI exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure inside a solver or fit. CLI exit code 3.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ybcav

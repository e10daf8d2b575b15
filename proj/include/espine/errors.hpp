#pragma once

#include <stdexcept>
#include <string>

namespace espine {

// Bad configuration or malformed input file. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Workload cannot be mapped onto the requested hardware. CLI exit code 3.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical solve or calibration failure. CLI exit code 4.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace espine

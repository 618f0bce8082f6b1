#pragma once

#include <stdexcept>
#include <string>

namespace eepn {

/// Invalid or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A root-finding target that the simulated curve does not bracket.
/// Maps to CLI exit code 3.
class RangeError : public std::runtime_error {
public:
    RangeError(const std::string& what, double low, double high)
        : std::runtime_error(what), achieved_low_(low), achieved_high_(high) {}

    double achieved_low() const noexcept { return achieved_low_; }
    double achieved_high() const noexcept { return achieved_high_; }

private:
    double achieved_low_;
    double achieved_high_;
};

}  // namespace eepn

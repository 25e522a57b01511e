// errors.hpp: exception types raised by the numerical stages

#pragma once

#include <stdexcept>
#include <string>

namespace jcdpt {

// Invalid physical parameters, truncations, grids or configuration values.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Base for every failure of a numerical stage. `stage()` names the stage so
// the CLI can report where a run broke down.
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

class NonUniqueSteadyState : public NumericalError {
public:
    explicit NonUniqueSteadyState(const std::string& what)
        : NumericalError("steady-state", what) {}
};

class NoConvergence : public NumericalError {
public:
    explicit NoConvergence(const std::string& what)
        : NumericalError("steady-state", what) {}
};

class UnstableMode : public NumericalError {
public:
    explicit UnstableMode(const std::string& what)
        : NumericalError("correlation", what) {}
};

class NonzeroDetuning : public ConfigError {
public:
    explicit NonzeroDetuning(const std::string& what) : ConfigError(what) {}
};

class NegativeRadicand : public NumericalError {
public:
    explicit NegativeRadicand(const std::string& what)
        : NumericalError("ep-formula", what) {}
};

class NoCoalescenceInRange : public NumericalError {
public:
    explicit NoCoalescenceInRange(const std::string& what)
        : NumericalError("ep-locate", what) {}
};

class BranchTrackingLost : public NumericalError {
public:
    explicit BranchTrackingLost(const std::string& what)
        : NumericalError("branch-tracking", what) {}
};

class NonpositiveEnergy : public ConfigError {
public:
    explicit NonpositiveEnergy(const std::string& what) : ConfigError(what) {}
};

} // namespace jcdpt

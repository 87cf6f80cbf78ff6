#pragma once

#include <stdexcept>
#include <string>

namespace apsolve {

/// Invalid argument or geometry (empty grid, too few points, negative constant).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when an explicit monotone stage would violate its CFL condition.
class StabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The model returned a non-finite value.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A scalar root solve (I or J) could not be completed.
class SolverFailure : public std::runtime_error {
public:
    explicit SolverFailure(const std::string& what, long step = -1)
        : std::runtime_error(what), step_(step) {}

    /// Time step index where the failure happened, -1 when not inside a run.
    long step() const noexcept { return step_; }

private:
    long step_;
};

/// Bad configuration text; `key()` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace apsolve

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ckrf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (grid size, model parameters, config keys).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative kernel failed (AGM cap, CG breakdown, non-finite values).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Model data that cannot describe a valid geometry (Im tau <= 0, degenerate fiber).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Poisson right-hand side with non-zero mean.
class SolvabilityError : public Error {
public:
    SolvabilityError(const std::string& what, double mean) : Error(what), mean_(mean) {}
    double mean() const noexcept { return mean_; }

private:
    double mean_;
};

/// Areas or curvature sources of a model that do not balance.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// A density that must stay positive (Kahler cone) became non-positive.
class PositivityError : public Error {
public:
    using Error::Error;
};

/// Newton iteration ran out of iterations; carries the residual history.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// Explicit time step larger than the stability guard allows.
class StabilityError : public Error {
public:
    using Error::Error;
};

} // namespace ckrf

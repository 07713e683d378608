#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cac {

/// Caller broke an operation's precondition (bad class/priority pairing,
/// departure from an empty class, out-of-range state index).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Configuration could not be loaded or violates a model invariant.
class ConfigError : public std::runtime_error {
public:
    enum class Kind { MissingFile, Parse, Schema, Invariant };

    ConfigError(Kind kind, std::string code, const std::string& message)
        : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    /// Stable machine-readable identifier, e.g. "gamma_ordering".
    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    Kind kind_;
    std::string code_;
};

/// rebalance() was asked to fit an occupancy that overflows even the
/// requested priority's floors. Callers must reject instead.
class InfeasibleRebalance : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A linear solve or fixed-point iteration failed to reach tolerance.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Birth-death chain with no positive arrival rate.
class DegenerateChain : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class StateCapExceeded : public std::runtime_error {
public:
    StateCapExceeded(std::size_t reached, std::size_t cap)
        : std::runtime_error("oracle state space exceeded cap: reached " +
                             std::to_string(reached) + " states (cap " +
                             std::to_string(cap) + ")"),
          reached_(reached), cap_(cap) {}

    [[nodiscard]] std::size_t reached() const noexcept { return reached_; }
    [[nodiscard]] std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t reached_;
    std::size_t cap_;
};

/// Simulation measurement window is empty (warmup >= horizon).
class NoSampleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cac

#pragma once

// Exact multi-class CTMC of the admission policy.
//
// A state is the per-class occupancy plus, when calls are degraded, the
// profile that governs their allocation. Allocation (and so the drain rate of
// elastic calls) depends on which priority last squeezed the cell, so the
// profile has to be part of the state for the chain to be Markov. Undegraded
// states forget their profile.

#include <cstddef>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cac/core_model.hpp"
#include "cac/metrics.hpp"
#include "cac/scenario.hpp"

namespace cac {

inline constexpr std::size_t kDefaultStateCap = 2'000'000;

/// Poisson rates feeding the oracle, per class.
struct ArrivalSplit {
    Eigen::VectorXd new_rate;
    Eigen::VectorXd handover_rate;
    /// Per-call dwell-expiry rate (endogenous mode), else 0.
    double mobility = 0.0;
    /// Per-call completion rate at full allocation, 1 / duration.
    double completion = 0.0;
};

[[nodiscard]] ArrivalSplit arrival_split(const SimConfig& config);

class StateSpace {
public:
    /// Index of the state equivalent to s, or size() if absent.
    [[nodiscard]] std::size_t find(const CellState& s) const;
    /// Inserts if absent; returns (index, inserted).
    std::pair<std::size_t, bool> insert(const CellState& s);

    [[nodiscard]] std::size_t size() const { return states_.size(); }
    [[nodiscard]] const CellState& operator[](std::size_t k) const { return states_[k]; }
    [[nodiscard]] const std::vector<CellState>& states() const { return states_; }

private:
    struct KeyHash {
        std::size_t operator()(const std::vector<int>& key) const noexcept;
    };
    static std::vector<int> key_of(const CellState& s);

    std::vector<CellState> states_;
    std::unordered_map<std::vector<int>, std::size_t, KeyHash> index_;
};

using GeneratorMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Breadth-first closure from the empty cell under accepted arrivals,
/// completions and (endogenous mode) handover attempts. Deterministic order.
/// Throws StateCapExceeded once more than `cap` states are reached.
[[nodiscard]] StateSpace enumerate_states(const SimConfig& config,
                                          std::size_t cap = kDefaultStateCap);

/// Transition-rate matrix over an enumerated space: off-diagonals >= 0,
/// rows sum to zero.
[[nodiscard]] GeneratorMatrix build_generator(const StateSpace& space, const SimConfig& config);

/// pi Q = 0, sum pi = 1, by sparse LU. Throws NumericalFailure when the
/// residual exceeds 1e-10 (scaled by the largest exit rate).
[[nodiscard]] Eigen::VectorXd solve_stationary(const GeneratorMatrix& generator);

[[nodiscard]] Metrics exact_metrics(const StateSpace& space, const Eigen::VectorXd& pi,
                                    const SimConfig& config);

/// enumerate -> generator -> solve -> metrics.
[[nodiscard]] Metrics oracle_metrics(const SimConfig& config, std::size_t cap = kDefaultStateCap);

}  // namespace cac

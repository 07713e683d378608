#pragma once

// Multi-level bandwidth adaptation: admission control and per-class
// bandwidth reallocation for a single cell.
//
// Priorities run 0..M. Priority 0 is a handover call of any class; a new call
// of class m (1-based) has priority m. Classes are stored 0-based, so the class
// at position k has new-call priority k + 1.

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace cac {

/// Tolerance (kbps) used for every capacity comparison.
inline constexpr double kCapacityEpsilon = 1e-6;

using ClassIndex = std::size_t;

class Priority {
public:
    constexpr explicit Priority(int level) : level_(level) {}

    static constexpr Priority handover() { return Priority{0}; }
    static constexpr Priority new_call(ClassIndex m) { return Priority{static_cast<int>(m) + 1}; }

    [[nodiscard]] constexpr int level() const { return level_; }
    [[nodiscard]] constexpr bool is_handover() const { return level_ == 0; }

    constexpr auto operator<=>(const Priority&) const = default;

private:
    int level_;
};

struct ClassSpec {
    std::string name;
    double requested_kbps = 0.0;
    /// gamma[p]: largest fraction of this class's requested bandwidth that may
    /// be released to admit a priority-p call; size M + 1.
    std::vector<double> gamma;
    /// Call duration scales with allocated bandwidth (non-real-time traffic).
    bool elastic = false;
    double mix_fraction = 0.0;
};

/// Validated cell configuration. Construct with make(); the class table is
/// cached as Eigen vectors.
class SystemConfig {
public:
    /// Throws ConfigError(Invariant) naming the first violated invariant.
    static SystemConfig make(double capacity_kbps, std::vector<ClassSpec> classes);

    [[nodiscard]] double capacity() const { return capacity_; }
    [[nodiscard]] std::size_t num_classes() const { return classes_.size(); }
    /// Lowest priority level, M.
    [[nodiscard]] int max_priority() const { return static_cast<int>(classes_.size()); }

    [[nodiscard]] const std::vector<ClassSpec>& classes() const { return classes_; }
    [[nodiscard]] const ClassSpec& spec(ClassIndex m) const { return classes_.at(m); }

    /// C_{m,r}, one entry per class.
    [[nodiscard]] const Eigen::VectorXd& requested() const { return requested_; }
    /// gamma_{m,p}, M x (M+1).
    [[nodiscard]] const Eigen::MatrixXd& gamma() const { return gamma_; }
    /// C_{m,p} = C_{m,r} (1 - gamma_{m,p}), M x (M+1).
    [[nodiscard]] const Eigen::MatrixXd& floors() const { return floors_; }
    [[nodiscard]] const Eigen::VectorXd& mix() const { return mix_; }
    [[nodiscard]] bool elastic(ClassIndex m) const { return classes_.at(m).elastic; }

private:
    SystemConfig() = default;

    double capacity_ = 0.0;
    std::vector<ClassSpec> classes_;
    Eigen::VectorXd requested_;
    Eigen::MatrixXd gamma_;
    Eigen::MatrixXd floors_;
    Eigen::VectorXd mix_;
};

/// Occupancy and the uniform per-class allocation currently in force.
///
/// Allocations always follow alloc[m] = C_{m,r} (1 - level * gamma_{m,profile}),
/// including classes with no calls, so the current degradation factor of
/// class m is level * gamma_{m,profile}.
struct CellState {
    Eigen::VectorXi occupancy;
    Eigen::VectorXd alloc_kbps;
    int profile = 0;
    double level = 0.0;

    friend bool operator==(const CellState&, const CellState&) = default;
};

enum class RejectReason { None, InsufficientAtFloor };

struct AdmissionDecision {
    bool accepted = false;
    /// On accept, the complete post-admission state. On reject, the input state.
    CellState plan;
    RejectReason reason = RejectReason::None;
    /// How far the floor requirement exceeded the available bandwidth (kbps).
    double shortfall_kbps = 0.0;
};

[[nodiscard]] CellState empty_state(const SystemConfig& config);

/// Sum of n_m * C_{m,r}.
[[nodiscard]] double full_demand(const Eigen::VectorXi& occupancy, const SystemConfig& config);
[[nodiscard]] double total_allocated(const CellState& state);

/// C_{m,p}; non-decreasing in p for a valid gamma row.
[[nodiscard]] double min_allocation(const ClassSpec& spec, Priority p);

/// Unused bandwidth C - sum n_m C_{m,a}.
[[nodiscard]] double free_bandwidth(const CellState& state, const SystemConfig& config);

/// sum n_m (C_{m,a} - C_{m,p}). Negative terms are kept: a class already
/// squeezed below its p-floor contributes negative headroom.
[[nodiscard]] double releasable_bandwidth(const CellState& state, const SystemConfig& config,
                                          Priority p);

/// C - sum n_m C_{m,p}; equals free + releasable.
[[nodiscard]] double available_bandwidth(const CellState& state, const SystemConfig& config,
                                         Priority p);

/// Admission test at an arbitrary priority 0..M, without building a plan.
[[nodiscard]] bool can_admit(const CellState& state, const SystemConfig& config, ClassIndex m,
                             Priority p);

/// Decide whether a call of class m at priority p enters the cell.
/// p must be handover (0) or the class's own new-call priority (m + 1);
/// any other pairing throws ContractViolation.
[[nodiscard]] AdmissionDecision admit(const CellState& state, const SystemConfig& config,
                                      ClassIndex m, Priority p);

/// Fit occupancy into capacity under profile p with the smallest uniform
/// degradation level. Throws InfeasibleRebalance if even the p-floors overflow.
[[nodiscard]] CellState rebalance(const Eigen::VectorXi& occupancy, const SystemConfig& config,
                                  Priority p);

/// Remove one class-m call and rebalance at the shallowest profile that fits.
[[nodiscard]] CellState release_and_relax(const CellState& state, const SystemConfig& config,
                                          ClassIndex m);

/// First broken CellState invariant (allocation/level consistency, capacity,
/// absolute floors, full allocation when uncongested), or nullopt.
[[nodiscard]] std::optional<std::string> invariant_violation(const CellState& state,
                                                             const SystemConfig& config);

}  // namespace cac

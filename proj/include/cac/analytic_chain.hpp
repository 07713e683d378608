#pragma once

// One-dimensional state-dependent birth-death approximation of the cell.
//
// State i counts calls. Below the hard-QoS bound N every call holds its
// requested bandwidth; above it calls are degraded and elastic ones last
// longer. A priority-p arrival is admitted while i < K[p], so the birth rate
// into state i is the sum of lambda_p over priorities with K[p] >= i.

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "cac/core_model.hpp"
#include "cac/errors.hpp"
#include "cac/metrics.hpp"
#include "cac/scenario.hpp"

namespace cac {

/// Mix-weighted mean requested bandwidth.
[[nodiscard]] double mean_requested(const SystemConfig& config);
/// Mix-weighted mean priority-p floor.
[[nodiscard]] double mean_floor(const SystemConfig& config, Priority p);
/// Share of offered calls that belong to non-elastic classes.
[[nodiscard]] double rigid_fraction(const SystemConfig& config);

/// Throws ConfigError(Invariant, "threshold_ordering") unless
/// N <= K[M] <= ... <= K[0] with M + 1 entries.
void validate_thresholds(const ThresholdSet& thresholds, std::size_t num_classes);

/// N = floor(C / mean requested), K[p] = floor(C / mean p-floor), unless an
/// override is supplied (validated, then returned unchanged).
[[nodiscard]] ThresholdSet derive_thresholds(const SystemConfig& config,
                                             const std::optional<ThresholdSet>& override_set = {});

/// Per-call completion rate in state i: mu up to N, then
/// mu (phi + (1 - phi) s(i)) with s(i) = min(1, C / (i * mean requested)).
[[nodiscard]] double effective_service_rate(int i, const SystemConfig& config,
                                            const ThresholdSet& thresholds, double mu, double phi);

template <typename Scalar = double>
struct ChainSpec {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    /// lambda_p for p = 0..M.
    Vector lambda;
    Scalar mu = Scalar(1);
    /// Per-call rate for each state 0..K[0]; entries at or below N are mu.
    Vector mu_i;
    ThresholdSet thresholds;

    [[nodiscard]] int top_state() const { return thresholds.max_state.front(); }
    [[nodiscard]] Scalar total_arrival() const { return lambda.sum(); }
};

template <typename Scalar = double>
struct StationaryDistribution {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> P;
};

template <typename Scalar>
[[nodiscard]] Scalar arrival_rate_at(int i, const ChainSpec<Scalar>& spec) {
    if (i < 1 || i > spec.top_state()) {
        throw ContractViolation("state " + std::to_string(i) + " outside 1.." +
                                std::to_string(spec.top_state()));
    }
    Scalar rate(0);
    for (Eigen::Index p = 0; p < spec.lambda.size(); ++p) {
        if (spec.thresholds.max_state[static_cast<std::size_t>(p)] >= i) rate += spec.lambda(p);
    }
    return rate;
}

/// Departure rate out of state i: i * mu_i.
template <typename Scalar>
[[nodiscard]] Scalar departure_rate_at(int i, const ChainSpec<Scalar>& spec) {
    if (i < 1 || i > spec.top_state()) {
        throw ContractViolation("state " + std::to_string(i) + " outside 1.." +
                                std::to_string(spec.top_state()));
    }
    return Scalar(i) * (i <= spec.thresholds.hard_qos ? spec.mu : spec.mu_i(i));
}

/// Solve the chain by the product-form recursion
/// P_i = P_{i-1} * arrival(i) / (i * mu_i), rescaling on the way so no
/// factorial or power is ever formed, then normalize.
template <typename Scalar>
[[nodiscard]] StationaryDistribution<Scalar> stationary_distribution(const ChainSpec<Scalar>& spec) {
    using std::isfinite;
    const int top = spec.top_state();
    if (top < 0 || spec.mu_i.size() != top + 1 ||
        spec.lambda.size() != static_cast<Eigen::Index>(spec.thresholds.max_state.size())) {
        throw ContractViolation("chain vectors do not match thresholds");
    }
    if ((spec.lambda.array() < Scalar(0)).any() || (spec.mu_i.array() < Scalar(0)).any() ||
        spec.mu < Scalar(0)) {
        throw ContractViolation("chain rates must be non-negative");
    }
    if (spec.total_arrival() == Scalar(0) && spec.mu == Scalar(0) &&
        (spec.mu_i.array() == Scalar(0)).all()) {
        throw DegenerateChain("all chain rates are zero");
    }

    const Scalar big = Scalar(1e200);
    StationaryDistribution<Scalar> out;
    out.P.setZero(top + 1);
    out.P(0) = Scalar(1);
    for (int i = 1; i <= top; ++i) {
        const Scalar up = arrival_rate_at(i, spec);
        if (up == Scalar(0)) break;  // states above are unreachable
        const Scalar down = departure_rate_at(i, spec);
        if (!(down > Scalar(0))) {
            throw DegenerateChain("state " + std::to_string(i) +
                                  " has arrivals but no departures");
        }
        out.P(i) = out.P(i - 1) * up / down;
        if (out.P(i) > big) out.P.head(i + 1) /= big;
    }
    const Scalar total = out.P.sum();
    if (!(total > Scalar(0)) || !isfinite(static_cast<double>(total))) {
        throw NumericalFailure("stationary distribution failed to normalize");
    }
    out.P /= total;
    return out;
}

/// P_D: probability the chain sits in its top state K[0].
template <typename Scalar>
[[nodiscard]] Scalar handover_dropping(const StationaryDistribution<Scalar>& dist,
                                       const ThresholdSet& thresholds) {
    return dist.P(thresholds.max_state.front());
}

/// P_{B,m} = sum of P_i for i >= K[m]; m = 0 gives P_D.
template <typename Scalar>
[[nodiscard]] Scalar new_call_blocking(const StationaryDistribution<Scalar>& dist,
                                       const ThresholdSet& thresholds, int m) {
    if (m < 0 || m >= static_cast<int>(thresholds.max_state.size())) {
        throw ContractViolation("class " + std::to_string(m) + " out of range");
    }
    const int from = thresholds.max_state[static_cast<std::size_t>(m)];
    const int top = thresholds.max_state.front();
    return dist.P.segment(from, top - from + 1).sum();
}

/// Forced-termination probability from dwell and duration means.
[[nodiscard]] double forced_termination(double p_drop, double dwell_mean_s, double duration_mean_s);

/// Chain for a scenario at a given handover arrival rate lambda_0.
/// In endogenous mode calls also leave by handing over, so the per-call
/// rate gains 1 / dwell on top of the completion law.
[[nodiscard]] ChainSpec<double> build_chain(const Scenario& scenario, double handover_rate);

struct ChainSolution {
    ChainSpec<double> chain;
    StationaryDistribution<double> dist;
    double handover_rate = 0.0;
    int iterations = 0;
};

/// Solve the scenario's chain. In endogenous mode the handover rate is found
/// by fixed-point iteration (at most 100 steps, tolerance 1e-9).
[[nodiscard]] ChainSolution solve_scenario(const Scenario& scenario);

/// Per-class allocation in state i under a mix-proportional occupancy,
/// relaxed to the shallowest profile that fits.
[[nodiscard]] Eigen::VectorXd mean_field_allocation(int i, const SystemConfig& config);

[[nodiscard]] Metrics analytic_metrics(const Scenario& scenario);

}  // namespace cac

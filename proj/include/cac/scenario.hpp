#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cac/core_model.hpp"

namespace cac {

enum class HandoverMode { Exogenous, Endogenous };

/// Where handover arrivals come from.
///
/// Exogenous: Poisson stream of `rate` calls/s split across classes by mix.
/// Endogenous: every admitted call carries Exp(dwell_mean_s) dwell timers and
/// hands over back into the same cell when one fires.
struct HandoverModel {
    HandoverMode mode = HandoverMode::Exogenous;
    double rate = 0.0;
    std::optional<double> dwell_mean_s;
};

struct SimParams {
    std::uint64_t seed = 1;
    std::size_t replications = 10;
    double warmup_s = 1000.0;
    double horizon_s = 10000.0;
};

struct SimConfig {
    explicit SimConfig(SystemConfig s) : system(std::move(s)) {}

    SystemConfig system;
    double new_rate_total = 0.0;
    HandoverModel handover;
    double duration_mean_s = 120.0;
    SimParams sim;
};

/// Threshold state counts for the one-dimensional chain: N hard-QoS states
/// and K[p], the highest state at which a priority-p call is still admitted.
struct ThresholdSet {
    int hard_qos = 0;
    std::vector<int> max_state;

    friend bool operator==(const ThresholdSet&, const ThresholdSet&) = default;
};

/// State-dependent per-call service law of the one-dimensional chain.
/// Either the rigid-load blend (phi) or an explicit table of rates for
/// states N+1..K[0]. With neither, phi defaults to the rigid share of the mix.
struct ServiceLaw {
    std::optional<double> phi;
    std::optional<std::vector<double>> table;
};

/// Everything a configuration file describes.
struct Scenario {
    SimConfig base;
    std::optional<ThresholdSet> thresholds;
    ServiceLaw service_law;
    std::string description;
};

/// Copy of the scenario at another new-call rate. An exogenous handover rate
/// is scaled in proportion so the handover share stays fixed.
[[nodiscard]] Scenario with_new_rate(const Scenario& scenario, double new_rate_total);

}  // namespace cac

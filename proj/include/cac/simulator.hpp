#pragma once

#include <cstddef>
#include <functional>

#include "cac/core_model.hpp"
#include "cac/metrics.hpp"
#include "cac/scenario.hpp"

namespace cac {

/// Called after every processed event with the simulation time and state.
using StateObserver = std::function<void(double, const CellState&)>;

/// Throws ConfigError unless rates and times are positive (or zero for
/// arrival rates), replications >= 1 and endogenous mode has a dwell mean.
void validate_sim_config(const SimConfig& config);

/// One replication of the single-cell event loop. Each returned Estimate
/// holds the run's value with samples = 1, or samples = 0 when the run saw
/// nothing to measure. Fully determined by (config, replication_index).
/// Throws NoSampleError when warmup_s >= horizon_s.
[[nodiscard]] Metrics run_replication(const SimConfig& config, std::size_t replication_index,
                                      const StateObserver& observer = {});

/// Independent replications 0..R-1, aggregated to means with standard errors
/// and Student-t 95% half-widths.
[[nodiscard]] Metrics run(const SimConfig& config);

}  // namespace cac

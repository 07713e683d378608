#pragma once

#include <cstddef>
#include <vector>

namespace cac {

/// A measured or computed quantity. Exact evaluators report one sample with
/// zero half-width; the simulator reports the replication mean, the standard
/// error and the Student-t 95% half-width. samples == 0 means "no
/// observations" (e.g. blocking with no arrivals).
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    double half_width = 0.0;
    std::size_t samples = 0;

    [[nodiscard]] bool has_sample() const { return samples > 0; }

    static Estimate exact(double value) { return Estimate{value, 0.0, 0.0, 1}; }
};

struct Metrics {
    Estimate p_drop;
    /// New-call blocking, one per class (priority m + 1).
    std::vector<Estimate> p_block;
    Estimate p_forced;
    /// True when p_forced comes from the geometric handover-attempt formula
    /// rather than counting terminated calls.
    bool forced_from_formula = false;
    Estimate utilization;
    /// Call-weighted mean allocation per class (kbps).
    std::vector<Estimate> alloc;
    /// Time-averaged releasable bandwidth for priorities 0..M (kbps).
    std::vector<Estimate> releasable;
    /// Time-averaged number of calls in the cell.
    Estimate mean_occupancy;
    /// Handover arrival rate actually used or observed (calls/s).
    Estimate handover_rate;
};

}  // namespace cac

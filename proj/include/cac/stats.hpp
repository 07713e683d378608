#pragma once

#include <span>

#include "cac/metrics.hpp"

namespace cac {

/// Two-sided Student-t quantile for the given confidence and degrees of freedom.
[[nodiscard]] double student_t_quantile(double confidence, double dof);

/// Mean, standard error and 95% half-width of independent replication values.
/// A single value yields zero spread; an empty span yields samples == 0.
[[nodiscard]] Estimate summarize(std::span<const double> values);

/// Forced-termination probability under geometric handover attempts: each
/// call attempts a handover with probability p_handover before completing,
/// and each attempt fails with probability p_drop.
[[nodiscard]] double forced_termination_probability(double p_drop, double p_handover);

/// P_h = (1/dwell) / (1/dwell + 1/duration).
[[nodiscard]] double handover_propensity(double dwell_mean_s, double duration_mean_s);

/// Handover propensity inferred from flow balance when no dwell time is
/// known: H = A P_h / (1 - P_h (1 - P_D)) solved for P_h, where A is the
/// carried new-call rate and H the handover arrival rate.
[[nodiscard]] double inferred_handover_propensity(double handover_rate, double carried_new_rate,
                                                  double p_drop);

}  // namespace cac

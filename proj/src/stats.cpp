#include "cac/stats.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace cac {

double student_t_quantile(double confidence, double dof) {
    const boost::math::students_t dist(dof);
    return boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
}

Estimate summarize(std::span<const double> values) {
    Estimate e;
    e.samples = values.size();
    if (values.empty()) {
        return e;
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    e.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) {
        return e;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - e.mean) * (v - e.mean);
    const double n = static_cast<double>(values.size());
    e.std_error = std::sqrt(ss / (n - 1.0) / n);
    e.half_width = student_t_quantile(0.95, n - 1.0) * e.std_error;
    return e;
}

double forced_termination_probability(double p_drop, double p_handover) {
    if (p_drop < 0.0 || p_drop > 1.0 || p_handover < 0.0 || p_handover > 1.0) {
        throw std::invalid_argument("probabilities must lie in [0,1]");
    }
    const double denom = 1.0 - p_handover * (1.0 - p_drop);
    return denom > 0.0 ? p_handover * p_drop / denom : 0.0;
}

double handover_propensity(double dwell_mean_s, double duration_mean_s) {
    if (!(dwell_mean_s > 0.0) || !(duration_mean_s > 0.0)) {
        throw std::invalid_argument("dwell and duration means must be positive");
    }
    const double eta = 1.0 / dwell_mean_s;
    return eta / (eta + 1.0 / duration_mean_s);
}

double inferred_handover_propensity(double handover_rate, double carried_new_rate, double p_drop) {
    const double denom = carried_new_rate + handover_rate * (1.0 - p_drop);
    return denom > 0.0 ? handover_rate / denom : 0.0;
}

}  // namespace cac

#include "cac/analytic_chain.hpp"

#include <algorithm>
#include <cmath>

#include "cac/stats.hpp"

namespace cac {

namespace {

constexpr int kMaxFixedPointIterations = 100;
constexpr double kFixedPointTolerance = 1e-9;

int floor_ratio(double num, double den) {
    return static_cast<int>(std::floor(num / den + 1e-9));
}

double mobility_rate(const Scenario& scenario) {
    const auto& ho = scenario.base.handover;
    if (ho.mode == HandoverMode::Endogenous) return 1.0 / ho.dwell_mean_s.value();
    return 0.0;
}

}  // namespace

double mean_requested(const SystemConfig& config) { return config.mix().dot(config.requested()); }

double mean_floor(const SystemConfig& config, Priority p) {
    return config.mix().dot(config.floors().col(p.level()));
}

double rigid_fraction(const SystemConfig& config) {
    double share = 0.0;
    for (ClassIndex m = 0; m < config.num_classes(); ++m) {
        if (!config.elastic(m)) share += config.spec(m).mix_fraction;
    }
    return share;
}

void validate_thresholds(const ThresholdSet& thresholds, std::size_t num_classes) {
    const auto& K = thresholds.max_state;
    if (K.size() != num_classes + 1) {
        throw ConfigError(ConfigError::Kind::Invariant, "threshold_length",
                          "thresholds.K must have M+1 = " + std::to_string(num_classes + 1) +
                              " entries");
    }
    if (thresholds.hard_qos < 0 || thresholds.hard_qos > K.back()) {
        throw ConfigError(ConfigError::Kind::Invariant, "threshold_ordering",
                          "thresholds must satisfy 0 <= N <= K[M]");
    }
    for (std::size_t p = 0; p + 1 < K.size(); ++p) {
        if (K[p] < K[p + 1]) {
            throw ConfigError(ConfigError::Kind::Invariant, "threshold_ordering",
                              "thresholds must satisfy K[" + std::to_string(p + 1) + "] <= K[" +
                                  std::to_string(p) + "]");
        }
    }
}

ThresholdSet derive_thresholds(const SystemConfig& config,
                               const std::optional<ThresholdSet>& override_set) {
    if (override_set) {
        validate_thresholds(*override_set, config.num_classes());
        return *override_set;
    }
    ThresholdSet out;
    out.hard_qos = floor_ratio(config.capacity(), mean_requested(config));
    for (int p = 0; p <= config.max_priority(); ++p) {
        out.max_state.push_back(floor_ratio(config.capacity(), mean_floor(config, Priority{p})));
    }
    return out;
}

double effective_service_rate(int i, const SystemConfig& config, const ThresholdSet& thresholds,
                              double mu, double phi) {
    if (i < 1 || i > thresholds.max_state.front()) {
        throw ContractViolation("state " + std::to_string(i) + " outside 1.." +
                                std::to_string(thresholds.max_state.front()));
    }
    if (i <= thresholds.hard_qos) return mu;
    const double squeeze =
        std::min(1.0, config.capacity() / (static_cast<double>(i) * mean_requested(config)));
    return mu * (phi + (1.0 - phi) * squeeze);
}

double forced_termination(double p_drop, double dwell_mean_s, double duration_mean_s) {
    return forced_termination_probability(p_drop,
                                          handover_propensity(dwell_mean_s, duration_mean_s));
}

ChainSpec<double> build_chain(const Scenario& scenario, double handover_rate) {
    const auto& sys = scenario.base.system;
    ChainSpec<double> chain;
    chain.thresholds = derive_thresholds(sys, scenario.thresholds);
    const int top = chain.top_state();
    const int N = chain.thresholds.hard_qos;

    chain.lambda.resize(sys.max_priority() + 1);
    chain.lambda(0) = handover_rate;
    chain.lambda.tail(sys.max_priority()) = scenario.base.new_rate_total * sys.mix();

    const double completion = 1.0 / scenario.base.duration_mean_s;
    const double eta = mobility_rate(scenario);
    chain.mu = completion + eta;
    chain.mu_i = Eigen::VectorXd::Constant(top + 1, chain.mu);

    if (scenario.service_law.table) {
        const auto& table = *scenario.service_law.table;
        if (static_cast<int>(table.size()) != top - N) {
            throw ConfigError(ConfigError::Kind::Invariant, "mu_i_table_length",
                              "mu_i.table must list K[0] - N = " + std::to_string(top - N) +
                                  " rates (states N+1..K[0])");
        }
        for (int i = N + 1; i <= top; ++i) {
            const double rate = table[static_cast<std::size_t>(i - N - 1)];
            if (!(rate > 0.0) || rate > chain.mu) {
                throw ConfigError(ConfigError::Kind::Invariant, "mu_i_bound",
                                  "mu_i.table entries must lie in (0, mu]");
            }
            chain.mu_i(i) = rate;
        }
    } else {
        const double phi = scenario.service_law.phi.value_or(rigid_fraction(sys));
        for (int i = N + 1; i <= top; ++i) {
            chain.mu_i(i) = effective_service_rate(i, sys, chain.thresholds, completion, phi) + eta;
        }
    }
    return chain;
}

ChainSolution solve_scenario(const Scenario& scenario) {
    const auto& base = scenario.base;
    ChainSolution out;
    if (base.handover.mode == HandoverMode::Exogenous) {
        out.handover_rate = base.handover.rate;
        out.chain = build_chain(scenario, out.handover_rate);
        out.dist = stationary_distribution(out.chain);
        return out;
    }

    // Handover arrivals balance handover departures of carried calls:
    // lambda_0 = A P_h / (1 - P_h (1 - P_D)), A the carried new-call rate.
    const auto& sys = base.system;
    const double ph = handover_propensity(*base.handover.dwell_mean_s, base.duration_mean_s);
    double rate = base.new_rate_total * ph / (1.0 - ph);
    for (int it = 1; it <= kMaxFixedPointIterations; ++it) {
        out.chain = build_chain(scenario, rate);
        out.dist = stationary_distribution(out.chain);
        const auto& th = out.chain.thresholds;
        double carried = 0.0;
        for (int m = 1; m <= sys.max_priority(); ++m) {
            carried += base.new_rate_total * sys.mix()(m - 1) *
                       (1.0 - new_call_blocking(out.dist, th, m));
        }
        const double pd = handover_dropping(out.dist, th);
        const double next = carried * ph / (1.0 - ph * (1.0 - pd));
        out.iterations = it;
        if (std::abs(next - rate) <= kFixedPointTolerance * std::max(1.0, rate)) {
            out.handover_rate = next;
            if (next != rate) {
                out.chain = build_chain(scenario, next);
                out.dist = stationary_distribution(out.chain);
            }
            return out;
        }
        rate = next;
    }
    throw NumericalFailure("handover-rate fixed point did not converge in 100 iterations");
}

Eigen::VectorXd mean_field_allocation(int i, const SystemConfig& config) {
    const double calls = static_cast<double>(i);
    const double demand = calls * mean_requested(config);
    if (demand <= config.capacity()) return config.requested();

    int q = 0;
    for (int p = config.max_priority(); p >= 0; --p) {
        if (calls * mean_floor(config, Priority{p}) <= config.capacity() + kCapacityEpsilon) {
            q = p;
            break;
        }
    }
    const double releasable = demand - calls * mean_floor(config, Priority{q});
    const double level =
        releasable > 0.0 ? std::clamp((demand - config.capacity()) / releasable, 0.0, 1.0) : 0.0;
    return config.requested().cwiseProduct((1.0 - level * config.gamma().col(q).array()).matrix());
}

Metrics analytic_metrics(const Scenario& scenario) {
    const auto& base = scenario.base;
    const auto& sys = base.system;
    const auto M = static_cast<Eigen::Index>(sys.num_classes());
    const ChainSolution sol = solve_scenario(scenario);
    const auto& th = sol.chain.thresholds;
    const auto& P = sol.dist.P;

    Metrics out;
    const double pd = handover_dropping(sol.dist, th);
    out.p_drop = Estimate::exact(pd);
    double carried = 0.0;
    for (int m = 1; m <= sys.max_priority(); ++m) {
        const double pb = new_call_blocking(sol.dist, th, m);
        out.p_block.push_back(Estimate::exact(pb));
        carried += base.new_rate_total * sys.mix()(m - 1) * (1.0 - pb);
    }

    double ph = 0.0;
    if (base.handover.dwell_mean_s) {
        ph = handover_propensity(*base.handover.dwell_mean_s, base.duration_mean_s);
    } else {
        ph = inferred_handover_propensity(sol.handover_rate, carried, pd);
    }
    out.p_forced = Estimate::exact(forced_termination_probability(pd, ph));
    out.forced_from_formula = true;

    Eigen::VectorXd alloc_weighted = Eigen::VectorXd::Zero(M);
    Eigen::VectorXd releasable = Eigen::VectorXd::Zero(M + 1);
    double occupancy = 0.0;
    double utilization = 0.0;
    for (Eigen::Index i = 0; i < P.size(); ++i) {
        if (P(i) == 0.0) continue;
        const double calls = static_cast<double>(i);
        const Eigen::VectorXd alloc = mean_field_allocation(static_cast<int>(i), sys);
        const Eigen::VectorXd per_class = calls * sys.mix();
        occupancy += P(i) * calls;
        alloc_weighted += P(i) * calls * alloc;
        utilization += P(i) * std::min(1.0, per_class.dot(alloc) / sys.capacity());
        for (Eigen::Index p = 0; p <= M; ++p) {
            releasable(p) += P(i) * per_class.dot(alloc - sys.floors().col(p));
        }
    }
    for (Eigen::Index m = 0; m < M; ++m) {
        out.alloc.push_back(Estimate::exact(
            occupancy > 0.0 ? alloc_weighted(m) / occupancy : sys.requested()(m)));
    }
    for (Eigen::Index p = 0; p <= M; ++p) out.releasable.push_back(Estimate::exact(releasable(p)));
    out.utilization = Estimate::exact(utilization);
    out.mean_occupancy = Estimate::exact(occupancy);
    out.handover_rate = Estimate::exact(sol.handover_rate);
    return out;
}

}  // namespace cac

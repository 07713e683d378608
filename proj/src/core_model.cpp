#include "cac/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cac/errors.hpp"

namespace cac {

namespace {

ConfigError invariant_error(std::string code, const std::string& message) {
    return ConfigError(ConfigError::Kind::Invariant, std::move(code), message);
}

void check_priority(const SystemConfig& config, Priority p) {
    if (p.level() < 0 || p.level() > config.max_priority()) {
        throw ContractViolation("priority " + std::to_string(p.level()) + " outside 0.." +
                                std::to_string(config.max_priority()));
    }
}

void check_class(const SystemConfig& config, ClassIndex m) {
    if (m >= config.num_classes()) {
        throw ContractViolation("class index " + std::to_string(m) + " outside 0.." +
                                std::to_string(config.num_classes() - 1));
    }
}

Eigen::VectorXd occupancy_d(const Eigen::VectorXi& occupancy) { return occupancy.cast<double>(); }

}  // namespace

SystemConfig SystemConfig::make(double capacity_kbps, std::vector<ClassSpec> classes) {
    if (classes.empty()) {
        throw invariant_error("classes_empty", "at least one traffic class is required");
    }
    if (!(capacity_kbps > 0.0) || !std::isfinite(capacity_kbps)) {
        throw invariant_error("capacity_positive", "capacity_kbps must be positive and finite");
    }
    const auto M = classes.size();
    double mix_sum = 0.0;
    double max_requested = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
        const auto& c = classes[k];
        const std::string who = "class " + std::to_string(k + 1) + " (" + c.name + ")";
        if (!(c.requested_kbps > 0.0) || !std::isfinite(c.requested_kbps)) {
            throw invariant_error("requested_positive", who + ": requested_kbps must be > 0");
        }
        if (c.gamma.size() != M + 1) {
            throw invariant_error("gamma_length", who + ": gamma must have M+1 = " +
                                                      std::to_string(M + 1) + " entries");
        }
        if (!(c.gamma[0] < 1.0)) {
            throw invariant_error("gamma_ordering", who + ": gamma[0] must be < 1");
        }
        for (std::size_t p = 0; p + 1 < c.gamma.size(); ++p) {
            if (!(c.gamma[p] >= c.gamma[p + 1])) {
                throw invariant_error("gamma_ordering",
                                      who + ": gamma must be non-increasing in priority "
                                            "(gamma[" + std::to_string(p) + "] < gamma[" +
                                            std::to_string(p + 1) + "])");
            }
        }
        if (!(c.gamma[M] >= 0.0)) {
            throw invariant_error("gamma_ordering", who + ": gamma[M] must be >= 0");
        }
        if (!c.elastic && std::any_of(c.gamma.begin(), c.gamma.end(),
                                      [](double g) { return g != 0.0; })) {
            throw invariant_error("rigid_gamma_zero",
                                  who + ": non-elastic classes must have all gamma = 0");
        }
        if (!(c.mix_fraction >= 0.0 && c.mix_fraction <= 1.0)) {
            throw invariant_error("mix_range", who + ": mix_fraction must lie in [0,1]");
        }
        mix_sum += c.mix_fraction;
        max_requested = std::max(max_requested, c.requested_kbps);
    }
    if (std::abs(mix_sum - 1.0) > 1e-9) {
        std::ostringstream os;
        os.precision(17);
        os << "mix fractions must sum to 1 (got " << mix_sum << ")";
        throw invariant_error("mix_sum", os.str());
    }
    if (capacity_kbps < max_requested) {
        throw invariant_error("capacity_fits_one_call",
                              "capacity_kbps must be at least the largest requested bandwidth");
    }

    SystemConfig config;
    config.capacity_ = capacity_kbps;
    config.requested_.resize(static_cast<Eigen::Index>(M));
    config.gamma_.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M + 1));
    config.mix_.resize(static_cast<Eigen::Index>(M));
    for (std::size_t k = 0; k < M; ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        config.requested_(row) = classes[k].requested_kbps;
        config.mix_(row) = classes[k].mix_fraction;
        for (std::size_t p = 0; p <= M; ++p) {
            config.gamma_(row, static_cast<Eigen::Index>(p)) = classes[k].gamma[p];
        }
    }
    config.floors_ = (1.0 - config.gamma_.array()).colwise() * config.requested_.array();
    config.classes_ = std::move(classes);
    return config;
}

CellState empty_state(const SystemConfig& config) {
    const auto M = static_cast<Eigen::Index>(config.num_classes());
    return CellState{Eigen::VectorXi::Zero(M), config.requested(), config.max_priority(), 0.0};
}

double full_demand(const Eigen::VectorXi& occupancy, const SystemConfig& config) {
    return occupancy_d(occupancy).dot(config.requested());
}

double total_allocated(const CellState& state) {
    return occupancy_d(state.occupancy).dot(state.alloc_kbps);
}

double min_allocation(const ClassSpec& spec, Priority p) {
    return spec.requested_kbps * (1.0 - spec.gamma.at(static_cast<std::size_t>(p.level())));
}

double free_bandwidth(const CellState& state, const SystemConfig& config) {
    return config.capacity() - total_allocated(state);
}

double releasable_bandwidth(const CellState& state, const SystemConfig& config, Priority p) {
    check_priority(config, p);
    return occupancy_d(state.occupancy).dot(state.alloc_kbps - config.floors().col(p.level()));
}

double available_bandwidth(const CellState& state, const SystemConfig& config, Priority p) {
    check_priority(config, p);
    return config.capacity() - occupancy_d(state.occupancy).dot(config.floors().col(p.level()));
}

bool can_admit(const CellState& state, const SystemConfig& config, ClassIndex m, Priority p) {
    check_class(config, m);
    check_priority(config, p);
    const auto row = static_cast<Eigen::Index>(m);
    if (free_bandwidth(state, config) + kCapacityEpsilon >= config.requested()(row)) {
        return true;
    }
    return available_bandwidth(state, config, p) + kCapacityEpsilon >=
           config.floors()(row, p.level());
}

AdmissionDecision admit(const CellState& state, const SystemConfig& config, ClassIndex m,
                        Priority p) {
    check_class(config, m);
    if (p != Priority::handover() && p != Priority::new_call(m)) {
        throw ContractViolation("class " + std::to_string(m + 1) +
                                " may only arrive at priority 0 (handover) or " +
                                std::to_string(m + 1) + " (new call), not " +
                                std::to_string(p.level()));
    }
    const auto row = static_cast<Eigen::Index>(m);

    if (free_bandwidth(state, config) + kCapacityEpsilon >= config.requested()(row)) {
        AdmissionDecision decision{true, state, RejectReason::None, 0.0};
        decision.plan.occupancy(row) += 1;
        return decision;
    }

    const double need = config.floors()(row, p.level());
    const double available = available_bandwidth(state, config, p);
    if (available + kCapacityEpsilon >= need) {
        Eigen::VectorXi occupancy = state.occupancy;
        occupancy(row) += 1;
        return AdmissionDecision{true, rebalance(occupancy, config, p), RejectReason::None, 0.0};
    }
    return AdmissionDecision{false, state, RejectReason::InsufficientAtFloor, need - available};
}

CellState rebalance(const Eigen::VectorXi& occupancy, const SystemConfig& config, Priority p) {
    check_priority(config, p);
    if (occupancy.size() != static_cast<Eigen::Index>(config.num_classes()) ||
        (occupancy.array() < 0).any()) {
        throw ContractViolation("occupancy must hold one non-negative count per class");
    }
    const int q = p.level();
    const double capacity = config.capacity();
    const Eigen::VectorXd n = occupancy_d(occupancy);
    const double demand = n.dot(config.requested());

    CellState out{occupancy, config.requested(), q, 0.0};
    if (demand <= capacity + kCapacityEpsilon) {
        return out;
    }
    if (n.dot(config.floors().col(q)) > capacity + kCapacityEpsilon) {
        throw InfeasibleRebalance("occupancy does not fit even at priority-" + std::to_string(q) +
                                  " floors");
    }
    // Bandwidth released per unit of level.
    const double releasable = n.dot(config.requested().cwiseProduct(config.gamma().col(q)));
    if (releasable <= 0.0) {
        return out;  // demand within epsilon of capacity and nothing to squeeze
    }
    out.level = std::clamp((demand - capacity) / releasable, 0.0, 1.0);
    out.alloc_kbps = config.requested().cwiseProduct(
        (1.0 - out.level * config.gamma().col(q).array()).matrix());
    return out;
}

CellState release_and_relax(const CellState& state, const SystemConfig& config, ClassIndex m) {
    check_class(config, m);
    const auto row = static_cast<Eigen::Index>(m);
    if (state.occupancy(row) < 1) {
        throw ContractViolation("departure from empty class " + std::to_string(m + 1));
    }
    Eigen::VectorXi occupancy = state.occupancy;
    occupancy(row) -= 1;
    const Eigen::VectorXd n = occupancy_d(occupancy);
    for (int q = config.max_priority(); q > 0; --q) {
        if (n.dot(config.floors().col(q)) <= config.capacity() + kCapacityEpsilon) {
            return rebalance(occupancy, config, Priority{q});
        }
    }
    return rebalance(occupancy, config, Priority::handover());
}

std::optional<std::string> invariant_violation(const CellState& state, const SystemConfig& config) {
    const auto M = static_cast<Eigen::Index>(config.num_classes());
    if (state.occupancy.size() != M || state.alloc_kbps.size() != M) {
        return "state vectors do not match class count";
    }
    if ((state.occupancy.array() < 0).any()) {
        return "negative occupancy";
    }
    if (state.profile < 0 || state.profile > config.max_priority() || state.level < 0.0 ||
        state.level > 1.0) {
        return "profile or level out of range";
    }
    const Eigen::VectorXd expected = config.requested().cwiseProduct(
        (1.0 - state.level * config.gamma().col(state.profile).array()).matrix());
    if ((expected - state.alloc_kbps).cwiseAbs().maxCoeff() > 1e-9) {
        return "allocation inconsistent with level and profile";
    }
    if (total_allocated(state) > config.capacity() + kCapacityEpsilon) {
        return "capacity exceeded";
    }
    for (Eigen::Index k = 0; k < M; ++k) {
        if (state.occupancy(k) > 0 && state.alloc_kbps(k) + 1e-9 < config.floors()(k, 0)) {
            return "allocation below absolute floor for class " + std::to_string(k + 1);
        }
    }
    if (full_demand(state.occupancy, config) <= config.capacity() && state.level != 0.0) {
        return "degraded although full demand fits";
    }
    return std::nullopt;
}

}  // namespace cac

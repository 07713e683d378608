#include "cac/ctmc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/SparseLU>

#include "cac/errors.hpp"
#include "cac/stats.hpp"

namespace cac {

namespace {

/// Calls f(target, rate) for every state change leaving s.
template <typename F>
void for_each_transition(const CellState& s, const SimConfig& config, const ArrivalSplit& split,
                         F&& f) {
    const auto& sys = config.system;
    for (ClassIndex m = 0; m < sys.num_classes(); ++m) {
        const auto k = static_cast<Eigen::Index>(m);
        if (split.new_rate(k) > 0.0) {
            auto d = admit(s, sys, m, Priority::new_call(m));
            if (d.accepted) f(d.plan, split.new_rate(k));
        }
        if (split.handover_rate(k) > 0.0) {
            auto d = admit(s, sys, m, Priority::handover());
            if (d.accepted) f(d.plan, split.handover_rate(k));
        }
        const int n = s.occupancy(k);
        if (n == 0) continue;
        const double speed = sys.elastic(m) ? s.alloc_kbps(k) / sys.requested()(k) : 1.0;
        const double completion = n * split.completion * speed;
        if (completion > 0.0) f(release_and_relax(s, sys, m), completion);
        if (split.mobility > 0.0) {
            // The leaving call re-enters as a handover before its old
            // bandwidth is released; success keeps it, failure drops it.
            auto d = admit(s, sys, m, Priority::handover());
            const CellState target =
                d.accepted ? release_and_relax(d.plan, sys, m) : release_and_relax(s, sys, m);
            f(target, n * split.mobility);
        }
    }
}

}  // namespace

ArrivalSplit arrival_split(const SimConfig& config) {
    const auto& mix = config.system.mix();
    ArrivalSplit split;
    split.new_rate = config.new_rate_total * mix;
    split.completion = 1.0 / config.duration_mean_s;
    if (config.handover.mode == HandoverMode::Exogenous) {
        split.handover_rate = config.handover.rate * mix;
    } else {
        split.handover_rate = Eigen::VectorXd::Zero(mix.size());
        split.mobility = 1.0 / config.handover.dwell_mean_s.value();
    }
    return split;
}

std::size_t StateSpace::KeyHash::operator()(const std::vector<int>& key) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (int v : key) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
        h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
}

std::vector<int> StateSpace::key_of(const CellState& s) {
    std::vector<int> key(s.occupancy.data(), s.occupancy.data() + s.occupancy.size());
    key.push_back(s.level > 0.0 ? s.profile : -1);
    return key;
}

std::size_t StateSpace::find(const CellState& s) const {
    auto it = index_.find(key_of(s));
    return it == index_.end() ? states_.size() : it->second;
}

std::pair<std::size_t, bool> StateSpace::insert(const CellState& s) {
    auto [it, inserted] = index_.try_emplace(key_of(s), states_.size());
    if (inserted) states_.push_back(s);
    return {it->second, inserted};
}

StateSpace enumerate_states(const SimConfig& config, std::size_t cap) {
    const ArrivalSplit split = arrival_split(config);
    StateSpace space;
    space.insert(empty_state(config.system));
    std::deque<std::size_t> frontier{0};
    while (!frontier.empty()) {
        const std::size_t k = frontier.front();
        frontier.pop_front();
        const CellState s = space[k];
        for_each_transition(s, config, split, [&](const CellState& target, double) {
            auto [idx, inserted] = space.insert(target);
            if (inserted) {
                if (space.size() > cap) throw StateCapExceeded(space.size(), cap);
                frontier.push_back(idx);
            }
        });
    }
    return space;
}

GeneratorMatrix build_generator(const StateSpace& space, const SimConfig& config) {
    const ArrivalSplit split = arrival_split(config);
    const auto n = static_cast<Eigen::Index>(space.size());
    std::vector<Eigen::Triplet<double>> triplets;
    std::vector<double> exit(space.size(), 0.0);
    for (std::size_t k = 0; k < space.size(); ++k) {
        for_each_transition(space[k], config, split, [&](const CellState& target, double rate) {
            const std::size_t j = space.find(target);
            if (j == space.size()) {
                throw ContractViolation("transition leaves the enumerated state space");
            }
            if (j == k) return;
            triplets.emplace_back(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j), rate);
            exit[k] += rate;
        });
        triplets.emplace_back(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k), -exit[k]);
    }
    GeneratorMatrix q(n, n);
    q.setFromTriplets(triplets.begin(), triplets.end());
    return q;
}

Eigen::VectorXd solve_stationary(const GeneratorMatrix& generator) {
    const Eigen::Index n = generator.rows();
    if (n == 0) throw ContractViolation("empty generator");
    if (n == 1) return Eigen::VectorXd::Ones(1);

    // Solve Q^T pi = 0 with the first balance equation swapped for sum(pi) = 1.
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(generator.nonZeros() + n));
    for (Eigen::Index i = 0; i < generator.outerSize(); ++i) {
        for (GeneratorMatrix::InnerIterator it(generator, i); it; ++it) {
            if (it.col() != 0) triplets.emplace_back(it.col(), it.row(), it.value());
        }
    }
    for (Eigen::Index j = 0; j < n; ++j) triplets.emplace_back(0, j, 1.0);
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw NumericalFailure("sparse LU factorization of the generator failed");
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(0) = 1.0;
    Eigen::VectorXd pi = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !pi.allFinite()) {
        throw NumericalFailure("stationary solve failed");
    }
    if (pi.minCoeff() < -1e-10) {
        throw NumericalFailure("stationary solve produced negative probabilities");
    }
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();

    const double scale = std::max(1.0, generator.diagonal().cwiseAbs().maxCoeff());
    const Eigen::VectorXd residual = generator.transpose() * pi;
    if (residual.cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw NumericalFailure("stationary residual above tolerance");
    }
    return pi;
}

Metrics exact_metrics(const StateSpace& space, const Eigen::VectorXd& pi, const SimConfig& config) {
    const auto& sys = config.system;
    const auto M = static_cast<Eigen::Index>(sys.num_classes());
    const ArrivalSplit split = arrival_split(config);
    const bool endogenous = config.handover.mode == HandoverMode::Endogenous;

    Eigen::VectorXd block = Eigen::VectorXd::Zero(M);
    Eigen::VectorXd handover_block = Eigen::VectorXd::Zero(M);
    Eigen::VectorXd alloc_num = Eigen::VectorXd::Zero(M);
    Eigen::VectorXd alloc_den = Eigen::VectorXd::Zero(M);
    Eigen::VectorXd releasable = Eigen::VectorXd::Zero(M + 1);
    double utilization = 0.0;
    double occupancy = 0.0;
    double attempt_rate = 0.0;
    double drop_rate = 0.0;
    double admitted_new_rate = 0.0;

    for (std::size_t k = 0; k < space.size(); ++k) {
        const double w = pi(static_cast<Eigen::Index>(k));
        const CellState& s = space[k];
        const Eigen::VectorXd n = s.occupancy.cast<double>();
        for (ClassIndex m = 0; m < sys.num_classes(); ++m) {
            const auto c = static_cast<Eigen::Index>(m);
            const bool new_ok = can_admit(s, sys, m, Priority::new_call(m));
            const bool ho_ok = can_admit(s, sys, m, Priority::handover());
            if (!new_ok) block(c) += w;
            if (!ho_ok) handover_block(c) += w;
            if (new_ok) admitted_new_rate += w * split.new_rate(c);
            if (endogenous) {
                attempt_rate += w * n(c) * split.mobility;
                if (!ho_ok) drop_rate += w * n(c) * split.mobility;
            }
        }
        alloc_num += w * n.cwiseProduct(s.alloc_kbps);
        alloc_den += w * n;
        utilization += w * std::min(1.0, n.dot(s.alloc_kbps) / sys.capacity());
        occupancy += w * n.sum();
        for (Eigen::Index p = 0; p <= M; ++p) {
            releasable(p) += w * releasable_bandwidth(s, sys, Priority{static_cast<int>(p)});
        }
    }

    Metrics out;
    for (Eigen::Index m = 0; m < M; ++m) {
        out.p_block.push_back(Estimate::exact(block(m)));
        out.alloc.push_back(Estimate::exact(alloc_den(m) > 0.0 ? alloc_num(m) / alloc_den(m)
                                                                : sys.requested()(m)));
    }
    for (Eigen::Index p = 0; p <= M; ++p) out.releasable.push_back(Estimate::exact(releasable(p)));
    out.utilization = Estimate::exact(utilization);
    out.mean_occupancy = Estimate::exact(occupancy);

    if (endogenous) {
        // Handover attempts are not Poisson here; weight by attempt rate.
        out.p_drop = attempt_rate > 0.0 ? Estimate::exact(drop_rate / attempt_rate) : Estimate{};
        out.handover_rate = Estimate::exact(attempt_rate);
        out.p_forced = admitted_new_rate > 0.0 ? Estimate::exact(drop_rate / admitted_new_rate)
                                               : Estimate{};
        out.forced_from_formula = false;
    } else {
        const double pd = sys.mix().dot(handover_block);
        out.p_drop = Estimate::exact(pd);
        out.handover_rate = Estimate::exact(config.handover.rate);
        const double ph =
            config.handover.dwell_mean_s
                ? handover_propensity(*config.handover.dwell_mean_s, config.duration_mean_s)
                : inferred_handover_propensity(config.handover.rate, admitted_new_rate, pd);
        out.p_forced = Estimate::exact(forced_termination_probability(pd, ph));
        out.forced_from_formula = true;
    }
    return out;
}

Metrics oracle_metrics(const SimConfig& config, std::size_t cap) {
    const StateSpace space = enumerate_states(config, cap);
    const GeneratorMatrix q = build_generator(space, config);
    return exact_metrics(space, solve_stationary(q), config);
}

}  // namespace cac

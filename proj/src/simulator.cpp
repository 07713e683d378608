#include "cac/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

#include "cac/errors.hpp"
#include "cac/rng.hpp"
#include "cac/stats.hpp"

namespace cac {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

// Stream identifiers; new-call and handover streams are offset by class.
constexpr std::uint64_t kNewArrivalStream = 0;
constexpr std::uint64_t kHandoverArrivalStream = 1024;
constexpr std::uint64_t kWorkStream = 2048;
constexpr std::uint64_t kDwellStream = 2049;

enum class EventKind { NewArrival, HandoverArrival, DwellExpiry };

// Departures are never queued: per-class completion times move every time
// the allocation changes, so they are recomputed from the class clocks.
// Queued events rank after departures at equal times.
struct Event {
    double time;
    int rank;
    std::uint64_t seq;
    EventKind kind;
    std::uint32_t cls;
    std::uint32_t slot;
    std::uint32_t generation;
};

struct Later {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        if (a.rank != b.rank) return a.rank > b.rank;
        return a.seq > b.seq;
    }
};

struct Call {
    std::uint32_t cls = 0;
    std::uint32_t generation = 0;
    bool alive = false;
};

// (target class-clock reading, slot, generation); min-heap on the target.
struct Completion {
    double target;
    std::uint32_t slot;
    std::uint32_t generation;
    bool operator>(const Completion& o) const {
        if (target != o.target) return target > o.target;
        return slot > o.slot;
    }
};

class Replication {
public:
    Replication(const SimConfig& config, std::size_t replication, const StateObserver& observer)
        : cfg_(config),
          sys_(config.system),
          M_(config.system.num_classes()),
          observer_(observer),
          endogenous_(config.handover.mode == HandoverMode::Endogenous),
          state_(empty_state(config.system)),
          work_rng_(stream_seed(config.sim.seed, replication, kWorkStream)),
          dwell_rng_(stream_seed(config.sim.seed, replication, kDwellStream)),
          completions_(M_),
          clock_(M_, 0.0),
          speed_(M_, 1.0),
          next_departure_(M_, kNever),
          new_attempts_(M_, 0),
          new_blocked_(M_, 0),
          alloc_num_(M_, 0.0),
          alloc_den_(M_, 0.0),
          releasable_(M_ + 1, 0.0) {
        for (std::size_t m = 0; m < M_; ++m) {
            new_rng_.emplace_back(stream_seed(config.sim.seed, replication, kNewArrivalStream + m));
            handover_rng_.emplace_back(
                stream_seed(config.sim.seed, replication, kHandoverArrivalStream + m));
            const double f = sys_.mix()(static_cast<Eigen::Index>(m));
            new_rate_.push_back(config.new_rate_total * f);
            handover_rate_.push_back(endogenous_ ? 0.0 : config.handover.rate * f);
        }
    }

    Metrics run() {
        for (std::uint32_t m = 0; m < M_; ++m) {
            schedule_arrival(EventKind::NewArrival, m);
            schedule_arrival(EventKind::HandoverArrival, m);
        }
        const double horizon = cfg_.sim.horizon_s;
        while (true) {
            std::uint32_t dep_class = 0;
            double dep_time = kNever;
            for (std::uint32_t m = 0; m < M_; ++m) {
                if (next_departure_[m] < dep_time) {
                    dep_time = next_departure_[m];
                    dep_class = m;
                }
            }
            const double queued = events_.empty() ? kNever : events_.top().time;
            if (std::min(dep_time, queued) > horizon) break;

            if (dep_time <= queued) {
                advance(dep_time);
                depart(dep_class);
            } else {
                const Event e = events_.top();
                events_.pop();
                if (e.kind == EventKind::DwellExpiry && !call_matches(e.slot, e.generation)) {
                    continue;
                }
                advance(e.time);
                switch (e.kind) {
                    case EventKind::NewArrival: new_arrival(e.cls); break;
                    case EventKind::HandoverArrival: handover_arrival(e.cls); break;
                    case EventKind::DwellExpiry: dwell_expiry(e.slot); break;
                }
            }
            refresh_departures();
            if (observer_) observer_(now_, state_);
        }
        advance(horizon);
        return collect();
    }

private:
    bool in_window() const { return now_ >= cfg_.sim.warmup_s; }

    bool call_matches(std::uint32_t slot, std::uint32_t generation) const {
        return calls_[slot].alive && calls_[slot].generation == generation;
    }

    void push(EventKind kind, double time, std::uint32_t cls, std::uint32_t slot = 0,
              std::uint32_t generation = 0) {
        const int rank = kind == EventKind::DwellExpiry ? 1 : 2;
        events_.push(Event{time, rank, seq_++, kind, cls, slot, generation});
    }

    void schedule_arrival(EventKind kind, std::uint32_t m) {
        const bool is_new = kind == EventKind::NewArrival;
        const double rate = is_new ? new_rate_[m] : handover_rate_[m];
        if (rate <= 0.0) return;
        auto& rng = is_new ? new_rng_[m] : handover_rng_[m];
        push(kind, now_ + rng.exponential(1.0 / rate), m);
    }

    // Integrate time averages over the part of [now, t] inside the window and
    // run each class clock forward at its current speed.
    void advance(double t) {
        const double lo = std::max(now_, cfg_.sim.warmup_s);
        const double hi = std::min(t, cfg_.sim.horizon_s);
        if (hi > lo) {
            const double dt = hi - lo;
            const Eigen::VectorXd n = state_.occupancy.cast<double>();
            busy_ += dt * std::min(n.dot(state_.alloc_kbps), sys_.capacity());
            calls_in_cell_ += dt * n.sum();
            for (std::size_t m = 0; m < M_; ++m) {
                const auto k = static_cast<Eigen::Index>(m);
                alloc_num_[m] += dt * n(k) * state_.alloc_kbps(k);
                alloc_den_[m] += dt * n(k);
            }
            for (std::size_t p = 0; p <= M_; ++p) {
                releasable_[p] +=
                    dt * releasable_bandwidth(state_, sys_, Priority{static_cast<int>(p)});
            }
        }
        for (std::size_t m = 0; m < M_; ++m) clock_[m] += speed_[m] * (t - now_);
        now_ = t;
    }

    std::uint32_t create_call(std::uint32_t m) {
        std::uint32_t slot;
        if (free_slots_.empty()) {
            slot = static_cast<std::uint32_t>(calls_.size());
            calls_.emplace_back();
        } else {
            slot = free_slots_.back();
            free_slots_.pop_back();
        }
        Call& c = calls_[slot];
        c.cls = m;
        c.generation += 1;
        c.alive = true;
        // Work is measured in seconds of service at the requested bandwidth.
        completions_[m].push(
            Completion{clock_[m] + work_rng_.exponential(cfg_.duration_mean_s), slot, c.generation});
        if (endogenous_) schedule_dwell(slot);
        return slot;
    }

    void schedule_dwell(std::uint32_t slot) {
        const Call& c = calls_[slot];
        push(EventKind::DwellExpiry, now_ + dwell_rng_.exponential(*cfg_.handover.dwell_mean_s),
             c.cls, slot, c.generation);
    }

    void kill_call(std::uint32_t slot) {
        calls_[slot].alive = false;
        free_slots_.push_back(slot);
    }

    void new_arrival(std::uint32_t m) {
        schedule_arrival(EventKind::NewArrival, m);
        const bool counted = in_window();
        if (counted) ++new_attempts_[m];
        auto decision = admit(state_, sys_, m, Priority::new_call(m));
        if (!decision.accepted) {
            if (counted) ++new_blocked_[m];
            return;
        }
        state_ = std::move(decision.plan);
        if (counted) ++admitted_new_;
        create_call(m);
    }

    void handover_arrival(std::uint32_t m) {
        schedule_arrival(EventKind::HandoverArrival, m);
        const bool counted = in_window();
        if (counted) ++handover_attempts_;
        auto decision = admit(state_, sys_, m, Priority::handover());
        if (!decision.accepted) {
            if (counted) ++handover_dropped_;
            return;
        }
        state_ = std::move(decision.plan);
        create_call(m);
    }

    // The call re-enters this cell as a handover while still holding its
    // bandwidth, then its old leg is released.
    void dwell_expiry(std::uint32_t slot) {
        const std::uint32_t m = calls_[slot].cls;
        const bool counted = in_window();
        if (counted) ++handover_attempts_;
        auto decision = admit(state_, sys_, m, Priority::handover());
        if (decision.accepted) {
            state_ = release_and_relax(decision.plan, sys_, m);
            schedule_dwell(slot);
            return;
        }
        if (counted) {
            ++handover_dropped_;
            ++forced_terminations_;
        }
        state_ = release_and_relax(state_, sys_, m);
        kill_call(slot);
    }

    void depart(std::uint32_t m) {
        auto& heap = completions_[m];
        const Completion top = heap.top();
        heap.pop();
        kill_call(top.slot);
        state_ = release_and_relax(state_, sys_, m);
    }

    void refresh_departures() {
        for (std::size_t m = 0; m < M_; ++m) {
            const auto k = static_cast<Eigen::Index>(m);
            speed_[m] = sys_.elastic(m) ? state_.alloc_kbps(k) / sys_.requested()(k) : 1.0;
            auto& heap = completions_[m];
            while (!heap.empty() && !call_matches(heap.top().slot, heap.top().generation)) {
                heap.pop();
            }
            if (heap.empty()) {
                next_departure_[m] = kNever;
            } else {
                const double remaining = std::max(0.0, heap.top().target - clock_[m]);
                next_departure_[m] = now_ + remaining / speed_[m];
            }
        }
    }

    Metrics collect() const {
        const double window = cfg_.sim.horizon_s - cfg_.sim.warmup_s;
        auto ratio = [](std::uint64_t num, std::uint64_t den) {
            return den > 0 ? Estimate::exact(static_cast<double>(num) / static_cast<double>(den))
                           : Estimate{};
        };
        Metrics out;
        std::uint64_t carried_new = 0;
        for (std::size_t m = 0; m < M_; ++m) {
            out.p_block.push_back(ratio(new_blocked_[m], new_attempts_[m]));
            carried_new += new_attempts_[m] - new_blocked_[m];
            out.alloc.push_back(alloc_den_[m] > 0.0
                                    ? Estimate::exact(alloc_num_[m] / alloc_den_[m])
                                    : Estimate{sys_.requested()(static_cast<Eigen::Index>(m)), 0, 0, 0});
        }
        out.p_drop = ratio(handover_dropped_, handover_attempts_);
        for (double r : releasable_) out.releasable.push_back(Estimate::exact(r / window));
        out.utilization = Estimate::exact(std::min(1.0, busy_ / (sys_.capacity() * window)));
        out.mean_occupancy = Estimate::exact(calls_in_cell_ / window);
        out.handover_rate =
            Estimate::exact(static_cast<double>(handover_attempts_) / window);

        if (endogenous_) {
            out.p_forced = ratio(forced_terminations_, admitted_new_);
            out.forced_from_formula = false;
        } else {
            out.forced_from_formula = true;
            if (out.p_drop.has_sample()) {
                const double pd = out.p_drop.mean;
                const double ph =
                    cfg_.handover.dwell_mean_s
                        ? handover_propensity(*cfg_.handover.dwell_mean_s, cfg_.duration_mean_s)
                        : inferred_handover_propensity(out.handover_rate.mean,
                                                       static_cast<double>(carried_new) / window,
                                                       pd);
                out.p_forced = Estimate::exact(forced_termination_probability(pd, ph));
            }
        }
        return out;
    }

    const SimConfig& cfg_;
    const SystemConfig& sys_;
    const std::size_t M_;
    const StateObserver& observer_;
    const bool endogenous_;

    CellState state_;
    double now_ = 0.0;
    std::uint64_t seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> events_;

    std::vector<RandomStream> new_rng_;
    std::vector<RandomStream> handover_rng_;
    RandomStream work_rng_;
    RandomStream dwell_rng_;
    std::vector<double> new_rate_;
    std::vector<double> handover_rate_;

    std::vector<Call> calls_;
    std::vector<std::uint32_t> free_slots_;
    std::vector<std::priority_queue<Completion, std::vector<Completion>, std::greater<>>>
        completions_;
    std::vector<double> clock_;
    std::vector<double> speed_;
    std::vector<double> next_departure_;

    std::vector<std::uint64_t> new_attempts_;
    std::vector<std::uint64_t> new_blocked_;
    std::uint64_t handover_attempts_ = 0;
    std::uint64_t handover_dropped_ = 0;
    std::uint64_t forced_terminations_ = 0;
    std::uint64_t admitted_new_ = 0;
    double busy_ = 0.0;
    double calls_in_cell_ = 0.0;
    std::vector<double> alloc_num_;
    std::vector<double> alloc_den_;
    std::vector<double> releasable_;
};

Estimate aggregate(const std::vector<Metrics>& runs, const std::function<const Estimate&(const Metrics&)>& pick) {
    std::vector<double> values;
    values.reserve(runs.size());
    for (const auto& r : runs) {
        const Estimate& e = pick(r);
        if (e.has_sample()) values.push_back(e.mean);
    }
    return summarize(values);
}

ConfigError sim_error(std::string code, const std::string& message) {
    return ConfigError(ConfigError::Kind::Invariant, std::move(code), message);
}

}  // namespace

void validate_sim_config(const SimConfig& config) {
    if (!(config.new_rate_total >= 0.0) || !std::isfinite(config.new_rate_total)) {
        throw sim_error("rate_non_negative", "new_rate_total must be a finite rate >= 0");
    }
    if (!(config.duration_mean_s > 0.0) || !std::isfinite(config.duration_mean_s)) {
        throw sim_error("duration_positive", "duration_mean_s must be positive");
    }
    const auto& ho = config.handover;
    if (ho.mode == HandoverMode::Exogenous) {
        if (!(ho.rate >= 0.0) || !std::isfinite(ho.rate)) {
            throw sim_error("rate_non_negative", "handover rate must be a finite rate >= 0");
        }
    } else if (!ho.dwell_mean_s) {
        throw sim_error("dwell_required", "endogenous handover mode needs dwell_mean_s");
    }
    if (ho.dwell_mean_s && !(*ho.dwell_mean_s > 0.0)) {
        throw sim_error("dwell_positive", "dwell_mean_s must be positive");
    }
    if (config.sim.replications < 1) {
        throw sim_error("replications_positive", "replications must be >= 1");
    }
    if (!(config.sim.horizon_s > 0.0) || !(config.sim.warmup_s >= 0.0)) {
        throw sim_error("times_positive", "horizon_s must be > 0 and warmup_s >= 0");
    }
}

Metrics run_replication(const SimConfig& config, std::size_t replication_index,
                        const StateObserver& observer) {
    validate_sim_config(config);
    if (config.sim.warmup_s >= config.sim.horizon_s) {
        throw NoSampleError("measurement window is empty: warmup_s >= horizon_s");
    }
    return Replication(config, replication_index, observer).run();
}

Metrics run(const SimConfig& config) {
    std::vector<Metrics> runs;
    runs.reserve(config.sim.replications);
    for (std::size_t r = 0; r < config.sim.replications; ++r) {
        runs.push_back(run_replication(config, r));
    }
    const std::size_t M = config.system.num_classes();
    Metrics out;
    out.p_drop = aggregate(runs, [](const Metrics& m) -> const Estimate& { return m.p_drop; });
    out.p_forced = aggregate(runs, [](const Metrics& m) -> const Estimate& { return m.p_forced; });
    out.forced_from_formula = runs.front().forced_from_formula;
    out.utilization =
        aggregate(runs, [](const Metrics& m) -> const Estimate& { return m.utilization; });
    out.mean_occupancy =
        aggregate(runs, [](const Metrics& m) -> const Estimate& { return m.mean_occupancy; });
    out.handover_rate =
        aggregate(runs, [](const Metrics& m) -> const Estimate& { return m.handover_rate; });
    for (std::size_t k = 0; k < M; ++k) {
        out.p_block.push_back(
            aggregate(runs, [k](const Metrics& m) -> const Estimate& { return m.p_block[k]; }));
        Estimate a = aggregate(runs, [k](const Metrics& m) -> const Estimate& { return m.alloc[k]; });
        if (!a.has_sample()) a.mean = config.system.requested()(static_cast<Eigen::Index>(k));
        out.alloc.push_back(a);
    }
    for (std::size_t p = 0; p <= M; ++p) {
        out.releasable.push_back(
            aggregate(runs, [p](const Metrics& m) -> const Estimate& { return m.releasable[p]; }));
    }
    return out;
}

}  // namespace cac

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <vector>

#include "afl/rng.hpp"
#include "afl/sim/population.hpp"

namespace afl::sim {

struct InFlightJob {
    std::size_t client = 0;
    std::uint64_t version = 0;  // server updates applied when dispatched
    double dispatch_time = 0.0;
    double arrival_time = 0.0;
    std::uint64_t seq = 0;  // dispatch sequence number
};

// Min-heap on arrival time; equal times pop in insertion order.
class EventQueue {
public:
    void push(const InFlightJob& job);
    // Removes the earliest job and advances the clock to its arrival time.
    // Throws SimulationExhausted when empty.
    InFlightJob pop();
    const InFlightJob& top() const;

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    double now() const { return now_; }
    // Moves the clock forward (never backward).
    void advance_to(double t);

private:
    struct Entry {
        double time;
        std::uint64_t order;
        InFlightJob job;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.order > b.order;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::uint64_t next_order_ = 0;
    double now_ = 0.0;
};

// Dispatch/arrival state machine over a population. Dispatch requests that
// find no active idle client are held and retried when some idle client next
// becomes active.
class Engine {
public:
    Engine(Population population, std::uint64_t seed);

    double now() const { return queue_.now(); }

    // Throws SchedulingError if the client is busy, inactive, or unknown.
    InFlightJob dispatch(std::size_t client, std::uint64_t version);

    // Dispatch to a uniformly random active idle client, or defer.
    void request_dispatch(std::uint64_t version);

    // Time of the next arrival; resolves deferred dispatches that become
    // possible before it. nullopt when nothing is in flight or pending.
    std::optional<double> peek_arrival(std::uint64_t version);

    // Pops the next arrival and marks its client idle.
    InFlightJob next_arrival(std::uint64_t version);

    std::size_t in_flight() const { return queue_.size(); }
    std::size_t pending() const { return pending_; }
    bool busy(std::size_t client) const { return busy_.at(client); }
    std::uint64_t dispatched() const { return next_seq_; }
    // Smallest model version any in-flight job started from.
    std::optional<std::uint64_t> oldest_version() const;
    const Population& population() const { return population_; }
    Availability& availability() { return population_.availability; }

private:
    void service_pending(std::uint64_t version);

    Population population_;
    EventQueue queue_;
    Rng rng_;
    std::vector<bool> busy_;
    std::multiset<std::uint64_t> versions_;
    std::size_t pending_ = 0;
    std::optional<double> wake_;
    std::uint64_t next_seq_ = 0;
};

// Server updates applied between dispatch and arrival. Throws
// ConsistencyError if the job claims a version from the future.
std::uint64_t staleness_of(const InFlightJob& job, std::uint64_t server_update_count);

}  // namespace afl::sim

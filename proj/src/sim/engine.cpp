#include "afl/sim/engine.hpp"

#include <limits>
#include <string>

#include <boost/random/uniform_int_distribution.hpp>

#include "afl/errors.hpp"

namespace afl::sim {

void EventQueue::push(const InFlightJob& job) {
    heap_.push({job.arrival_time, next_order_++, job});
}

InFlightJob EventQueue::pop() {
    if (heap_.empty()) throw SimulationExhausted("event queue is empty");
    Entry e = heap_.top();
    heap_.pop();
    advance_to(e.time);
    return e.job;
}

const InFlightJob& EventQueue::top() const {
    if (heap_.empty()) throw SimulationExhausted("event queue is empty");
    return heap_.top().job;
}

void EventQueue::advance_to(double t) {
    if (t > now_) now_ = t;
}

Engine::Engine(Population population, std::uint64_t seed)
    : population_(std::move(population)),
      rng_(make_rng(seed, 0xE9E)),
      busy_(population_.size(), false) {}

InFlightJob Engine::dispatch(std::size_t client, std::uint64_t version) {
    if (client >= population_.size()) throw SchedulingError("unknown client " + std::to_string(client));
    if (busy_[client]) throw SchedulingError("client " + std::to_string(client) + " is already in flight");
    if (!population_.availability.is_active(client, now()))
        throw SchedulingError("client " + std::to_string(client) + " is not active");
    const auto& prof = population_.profiles[client];
    InFlightJob job;
    job.client = client;
    job.version = version;
    job.dispatch_time = now();
    const double compute = prof.compute.draw(rng_);
    const double upload = prof.upload.draw(rng_);
    job.arrival_time = job.dispatch_time + compute + upload;
    job.seq = next_seq_++;
    busy_[client] = true;
    versions_.insert(version);
    queue_.push(job);
    return job;
}

void Engine::request_dispatch(std::uint64_t version) {
    ++pending_;
    service_pending(version);
}

void Engine::service_pending(std::uint64_t version) {
    const double t = now();
    while (pending_ > 0) {
        std::vector<std::size_t> eligible;
        for (std::size_t c = 0; c < population_.size(); ++c)
            if (!busy_[c] && population_.availability.is_active(c, t)) eligible.push_back(c);
        if (eligible.empty()) break;
        boost::random::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
        dispatch(eligible[pick(rng_)], version);
        --pending_;
    }
    wake_.reset();
    if (pending_ == 0) return;
    double earliest = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < population_.size(); ++c)
        if (!busy_[c]) earliest = std::min(earliest, population_.availability.next_activation(c, t));
    // With every client busy the next arrival frees one; no wake needed.
    if (earliest < std::numeric_limits<double>::infinity()) wake_ = earliest;
}

std::optional<double> Engine::peek_arrival(std::uint64_t version) {
    while (true) {
        if (wake_ && (queue_.empty() || *wake_ <= queue_.top().arrival_time)) {
            queue_.advance_to(*wake_);
            service_pending(version);
            continue;
        }
        if (queue_.empty()) return std::nullopt;
        return queue_.top().arrival_time;
    }
}

InFlightJob Engine::next_arrival(std::uint64_t version) {
    if (!peek_arrival(version)) throw SimulationExhausted("no job in flight");
    InFlightJob job = queue_.pop();
    busy_[job.client] = false;
    versions_.erase(versions_.find(job.version));
    return job;
}

std::optional<std::uint64_t> Engine::oldest_version() const {
    if (versions_.empty()) return std::nullopt;
    return *versions_.begin();
}

std::uint64_t staleness_of(const InFlightJob& job, std::uint64_t server_update_count) {
    if (job.version > server_update_count)
        throw ConsistencyError("job version " + std::to_string(job.version) +
                               " is ahead of server update count " + std::to_string(server_update_count));
    return server_update_count - job.version;
}

}  // namespace afl::sim

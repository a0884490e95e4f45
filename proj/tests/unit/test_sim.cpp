#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "afl/errors.hpp"
#include "afl/sim/engine.hpp"
#include "afl/sim/population.hpp"
#include "afl/sim/trace.hpp"

using namespace afl;
using namespace afl::sim;

namespace {

struct AsyncRun {
    std::vector<std::uint64_t> staleness;
    std::vector<TraceEvent> trace;
    std::size_t max_in_flight = 0;
    std::uint64_t dispatched = 0;
};

// Arrival-driven loop with one server update per arrival, as in vanilla async.
AsyncRun simulate_async(std::size_t clients, double active_fraction, std::size_t concurrency,
                        std::uint64_t updates, std::uint64_t seed) {
    PopulationConfig cfg;
    cfg.clients = clients;
    cfg.active_fraction = active_fraction;
    Engine engine(build_population(cfg, seed), seed);
    for (std::size_t i = 0; i < concurrency; ++i) engine.request_dispatch(0);
    AsyncRun run;
    std::uint64_t version = 0;
    while (version < updates) {
        run.max_in_flight = std::max(run.max_in_flight, engine.in_flight());
        InFlightJob job = engine.next_arrival(version);
        const std::uint64_t tau = staleness_of(job, version);
        run.staleness.push_back(tau);
        run.trace.push_back({job.seq, job.arrival_time, job.client, job.version, tau});
        ++version;
        engine.request_dispatch(version);
    }
    run.dispatched = engine.dispatched();
    return run;
}

double mean(const std::vector<std::uint64_t>& v) {
    double s = 0.0;
    for (auto x : v) s += static_cast<double>(x);
    return s / static_cast<double>(v.size());
}

std::uint64_t nearest_rank(std::vector<std::uint64_t> v, double q) {
    std::sort(v.begin(), v.end());
    return v[static_cast<std::size_t>(std::ceil(q * v.size())) - 1];
}

}  // namespace

TEST_CASE("population: full availability means always on") {
    PopulationConfig cfg;
    cfg.clients = 20;
    cfg.active_fraction = 1.0;
    Population pop = build_population(cfg, 1);
    for (std::size_t c = 0; c < 20; ++c)
        for (double t : {0.0, 10.0, 1e4}) CHECK(pop.availability.is_active(c, t));
}

TEST_CASE("population: group mix assignment") {
    PopulationConfig cfg;
    cfg.clients = 30;
    cfg.group_mix = {0.0, 0.0, 1.0};
    Population pop = build_population(cfg, 2);
    for (const auto& p : pop.profiles) CHECK(p.group == SpeedGroup::fast);

    cfg.group_mix = {0.5, 0.3, 0.2};
    cfg.clients = 10;
    pop = build_population(cfg, 3);
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& p : pop.profiles) ++counts[static_cast<int>(p.group)];
    CHECK(counts[0] == 5);
    CHECK(counts[1] == 3);
    CHECK(counts[2] == 2);

    cfg.group_mix = {0.5, 0.3, 0.3};
    CHECK_THROWS_AS(build_population(cfg, 3), ConfigError);
    cfg.group_mix = {0.5, 0.3, 0.2};
    cfg.active_fraction = 0.0;
    CHECK_THROWS_AS(build_population(cfg, 3), ConfigError);
}

TEST_CASE("population: stationary active fraction") {
    PopulationConfig cfg;
    cfg.clients = 20;
    cfg.active_fraction = 0.1;
    Population pop = build_population(cfg, 4);
    std::size_t on = 0, total = 0;
    for (std::size_t c = 0; c < cfg.clients; ++c)
        for (double t = 0.0; t < 1e5; t += 10.0) {
            on += pop.availability.is_active(c, t);
            ++total;
        }
    CHECK(std::abs(static_cast<double>(on) / total - 0.1) <= 0.03);
}

TEST_CASE("next_activation is the earliest on time") {
    Availability av(3, 0.2, 5.0, 9);
    for (std::size_t c = 0; c < 3; ++c) {
        double t = 0.0;
        for (int k = 0; k < 50; ++k) {
            const double a = av.next_activation(c, t);
            CHECK(a >= t);
            CHECK(av.is_active(c, a));
            t = a + 3.0;
        }
    }
}

TEST_CASE("dispatch with degenerate delays lands at exp(mu_c) + exp(mu_u)") {
    PopulationConfig cfg;
    cfg.clients = 4;
    cfg.active_fraction = 1.0;
    cfg.compute_sigma = 0.0;
    cfg.upload_sigma = 0.0;
    Engine engine(build_population(cfg, 5), 5);
    const auto& prof = engine.population().profiles[2];
    InFlightJob job = engine.dispatch(2, 0);
    CHECK(job.arrival_time == 0.0 + std::exp(prof.compute.mu) + std::exp(prof.upload.mu));
    CHECK(job.arrival_time > job.dispatch_time);
    CHECK_THROWS_AS(engine.dispatch(2, 0), SchedulingError);
    CHECK_THROWS_AS(engine.dispatch(17, 0), SchedulingError);
}

TEST_CASE("dispatch to an inactive client is refused") {
    PopulationConfig cfg;
    cfg.clients = 50;
    cfg.active_fraction = 0.1;
    Engine engine(build_population(cfg, 6), 6);
    std::size_t inactive = cfg.clients;
    for (std::size_t c = 0; c < cfg.clients; ++c)
        if (!engine.availability().is_active(c, 0.0)) {
            inactive = c;
            break;
        }
    REQUIRE(inactive < cfg.clients);
    CHECK_THROWS_AS(engine.dispatch(inactive, 0), SchedulingError);
}

TEST_CASE("fast clients have shorter median lag than slow ones") {
    PopulationConfig cfg;
    Rng rng = make_rng(7);
    ClientProfile fast, slow;
    fast.compute = {std::log(cfg.compute_median[2]), cfg.compute_sigma};
    fast.upload = {std::log(cfg.upload_median[2]), cfg.upload_sigma};
    slow.compute = {std::log(cfg.compute_median[0]), cfg.compute_sigma};
    slow.upload = {std::log(cfg.upload_median[0]), cfg.upload_sigma};
    std::vector<double> f, s;
    for (int k = 0; k < 1000; ++k) {
        f.push_back(fast.compute.draw(rng) + fast.upload.draw(rng));
        s.push_back(slow.compute.draw(rng) + slow.upload.draw(rng));
    }
    std::nth_element(f.begin(), f.begin() + 500, f.end());
    std::nth_element(s.begin(), s.begin() + 500, s.end());
    CHECK(f[500] < s[500]);
    for (double x : f) CHECK(x > 0.0);
}

TEST_CASE("event queue ordering") {
    EventQueue q;
    CHECK_THROWS_AS(q.pop(), SimulationExhausted);
    q.push({0, 0, 0.0, 5.0, 0});
    q.push({1, 0, 0.0, 3.0, 1});
    q.push({2, 0, 0.0, 9.0, 2});
    CHECK(q.pop().arrival_time == 3.0);
    CHECK(q.now() == 3.0);
    CHECK(q.pop().arrival_time == 5.0);
    CHECK(q.pop().arrival_time == 9.0);
    CHECK(q.now() == 9.0);

    EventQueue tie;
    tie.push({4, 0, 0.0, 2.0, 0});
    tie.push({8, 0, 0.0, 2.0, 1});
    CHECK(tie.pop().client == 4);
    CHECK(tie.pop().client == 8);

    EventQueue single;
    single.push({3, 0, 0.0, 7.5, 0});
    InFlightJob j = single.pop();
    CHECK(j.client == 3);
    CHECK(single.now() == 7.5);
}

TEST_CASE("staleness definition") {
    InFlightJob job;
    job.version = 5;
    CHECK(staleness_of(job, 12) == 7);
    CHECK(staleness_of(job, 5) == 0);
    CHECK_THROWS_AS(staleness_of(job, 4), ConsistencyError);
}

TEST_CASE("engine conservation, clock monotonicity and determinism") {
    AsyncRun a = simulate_async(40, 0.1, 4, 2000, 11);
    AsyncRun b = simulate_async(40, 0.1, 4, 2000, 11);
    CHECK(a.max_in_flight <= 4);
    for (std::size_t i = 1; i < a.trace.size(); ++i) CHECK(a.trace[i].sim_time >= a.trace[i - 1].sim_time);
    std::vector<std::uint64_t> seqs;
    for (const auto& e : a.trace) seqs.push_back(e.seq);
    std::sort(seqs.begin(), seqs.end());
    CHECK(std::adjacent_find(seqs.begin(), seqs.end()) == seqs.end());
    CHECK(a.dispatched >= a.trace.size());
    CHECK(a.dispatched <= a.trace.size() + 4);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].sim_time == b.trace[i].sim_time);
        CHECK(a.trace[i].client == b.trace[i].client);
    }
}

TEST_CASE("mean staleness tracks N_a - 1 and the tail is long") {
    for (std::size_t na : {4u, 10u}) {
        AsyncRun run = simulate_async(100, 0.1, na, 5000, 12);
        const double m = mean(run.staleness);
        CHECK(m >= 0.8 * (na - 1));
        CHECK(m <= 1.2 * (na - 1));
    }
    AsyncRun run = simulate_async(100, 0.1, 10, 5000, 13);
    CHECK(nearest_rank(run.staleness, 0.99) >= 3 * nearest_rank(run.staleness, 0.5));
}

TEST_CASE("trace CSV round trip") {
    AsyncRun run = simulate_async(10, 1.0, 3, 50, 3);
    auto path = std::filesystem::temp_directory_path() / "afl_trace_roundtrip.csv";
    write_trace_csv(path, run.trace);
    auto back = read_trace_csv(path);
    REQUIRE(back.size() == run.trace.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].seq == run.trace[i].seq);
        CHECK(back[i].client == run.trace[i].client);
        CHECK(back[i].staleness == run.trace[i].staleness);
        CHECK(back[i].sim_time == doctest::Approx(run.trace[i].sim_time).epsilon(1e-6));
    }
    std::filesystem::remove(path);
}

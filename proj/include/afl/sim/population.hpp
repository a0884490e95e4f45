#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "afl/rng.hpp"

namespace afl::sim {

enum class SpeedGroup { slow = 0, medium = 1, fast = 2 };

const char* to_string(SpeedGroup g);

// Lognormal parameters in log-seconds.
struct DelayParams {
    double mu = 0.0;
    double sigma = 0.0;

    double median() const;
    double draw(Rng& rng) const;
};

struct ClientProfile {
    std::size_t id = 0;
    SpeedGroup group = SpeedGroup::fast;
    DelayParams compute;
    DelayParams upload;
};

struct PopulationConfig {
    std::size_t clients = 100;
    double active_fraction = 0.1;
    // Per-group arrays are ordered slow, medium, fast.
    std::array<double, 3> group_mix{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    std::array<double, 3> compute_median{9.0, 3.0, 1.0};
    std::array<double, 3> upload_median{2.25, 0.75, 0.25};
    double compute_sigma = 0.5;
    double upload_sigma = 0.5;
    // Each client's log-median is offset by Uniform(-jitter, +jitter) once at build.
    double client_jitter = 0.2;
    // Mean length of an "on" period; "off" periods are sized so that the
    // stationary on-fraction equals active_fraction.
    double mean_active_period = 50.0;

    void validate() const;
};

// Alternating exponential on/off process per client. Queries for one client
// must use nondecreasing times.
class Availability {
public:
    Availability() = default;
    Availability(std::size_t clients, double active_fraction, double mean_active_period,
                 std::uint64_t seed);

    bool is_active(std::size_t client, double t);
    // Earliest time >= t at which the client is on.
    double next_activation(std::size_t client, double t);
    bool always_on() const { return always_on_; }

private:
    struct State {
        bool active = true;
        double next_toggle = 0.0;
        Rng rng;
    };
    void advance(State& s, double t);
    double draw_period(State& s, bool active);

    std::vector<State> states_;
    double on_mean_ = 1.0;
    double off_mean_ = 0.0;
    bool always_on_ = true;
};

struct Population {
    std::vector<ClientProfile> profiles;
    Availability availability;

    std::size_t size() const { return profiles.size(); }
};

// Groups are assigned by largest-remainder counts from the mix, then
// shuffled; per-client delay parameters are drawn once here.
Population build_population(const PopulationConfig& cfg, std::uint64_t seed);

}  // namespace afl::sim

#include "afl/sim/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "afl/errors.hpp"

namespace afl::sim {

const char* to_string(SpeedGroup g) {
    switch (g) {
        case SpeedGroup::fast: return "fast";
        case SpeedGroup::medium: return "medium";
        case SpeedGroup::slow: return "slow";
    }
    return "?";
}

double DelayParams::median() const { return std::exp(mu); }

double DelayParams::draw(Rng& rng) const {
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    return std::exp(mu + sigma * normal(rng));
}

void PopulationConfig::validate() const {
    if (clients == 0) throw ConfigError("population: need at least one client");
    if (!(active_fraction > 0.0 && active_fraction <= 1.0))
        throw ConfigError("population: active_fraction must be in (0, 1]");
    double s = 0.0;
    for (double m : group_mix) {
        if (m < 0.0) throw ConfigError("population: negative group share");
        s += m;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("population: group mix must sum to 1");
    for (std::size_t g = 0; g < 3; ++g)
        if (!(compute_median[g] > 0.0) || !(upload_median[g] > 0.0))
            throw ConfigError("population: delay medians must be positive");
    // slow >= medium >= fast, so group medians keep their meaning.
    if (compute_median[0] < compute_median[1] || compute_median[1] < compute_median[2] ||
        upload_median[0] < upload_median[1] || upload_median[1] < upload_median[2])
        throw ConfigError("population: delay medians must be ordered slow >= medium >= fast");
    if (compute_sigma < 0.0 || upload_sigma < 0.0 || client_jitter < 0.0)
        throw ConfigError("population: sigma and jitter must be non-negative");
    if (!(mean_active_period > 0.0)) throw ConfigError("population: mean_active_period must be positive");
}

Availability::Availability(std::size_t clients, double active_fraction, double mean_active_period,
                           std::uint64_t seed)
    : on_mean_(mean_active_period),
      off_mean_(mean_active_period * (1.0 - active_fraction) / active_fraction),
      always_on_(active_fraction >= 1.0) {
    if (always_on_) return;
    states_.resize(clients);
    for (std::size_t c = 0; c < clients; ++c) {
        State& s = states_[c];
        s.rng = make_rng(seed, 0xA7A11 + c);
        boost::random::uniform_01<double> u01;
        s.active = u01(s.rng) < active_fraction;
        s.next_toggle = draw_period(s, s.active);
    }
}

double Availability::draw_period(State& s, bool active) {
    boost::random::exponential_distribution<double> expo(1.0 / (active ? on_mean_ : off_mean_));
    return expo(s.rng);
}

void Availability::advance(State& s, double t) {
    while (s.next_toggle <= t) {
        s.active = !s.active;
        s.next_toggle += draw_period(s, s.active);
    }
}

bool Availability::is_active(std::size_t client, double t) {
    if (always_on_) return true;
    State& s = states_.at(client);
    advance(s, t);
    return s.active;
}

double Availability::next_activation(std::size_t client, double t) {
    if (always_on_) return t;
    State& s = states_.at(client);
    advance(s, t);
    return s.active ? t : s.next_toggle;
}

Population build_population(const PopulationConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng = make_rng(seed, 0x9091);

    // Largest-remainder group counts.
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> rem{};
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < 3; ++g) {
        const double exact = cfg.group_mix[g] * static_cast<double>(cfg.clients);
        counts[g] = static_cast<std::size_t>(std::floor(exact));
        rem[g] = exact - static_cast<double>(counts[g]);
        assigned += counts[g];
    }
    while (assigned < cfg.clients) {
        const auto g = static_cast<std::size_t>(std::max_element(rem.begin(), rem.end()) - rem.begin());
        ++counts[g];
        rem[g] = -1.0;
        ++assigned;
    }

    std::vector<SpeedGroup> groups;
    groups.reserve(cfg.clients);
    for (std::size_t g = 0; g < 3; ++g)
        groups.insert(groups.end(), counts[g], static_cast<SpeedGroup>(g));
    for (std::size_t i = groups.size(); i > 1; --i) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(groups[i - 1], groups[pick(rng)]);
    }

    Population pop;
    pop.profiles.reserve(cfg.clients);
    boost::random::uniform_real_distribution<double> jitter(-cfg.client_jitter, cfg.client_jitter);
    for (std::size_t c = 0; c < cfg.clients; ++c) {
        const auto g = static_cast<std::size_t>(groups[c]);
        ClientProfile p;
        p.id = c;
        p.group = groups[c];
        const double jc = cfg.client_jitter > 0.0 ? jitter(rng) : 0.0;
        const double ju = cfg.client_jitter > 0.0 ? jitter(rng) : 0.0;
        p.compute = {std::log(cfg.compute_median[g]) + jc, cfg.compute_sigma};
        p.upload = {std::log(cfg.upload_median[g]) + ju, cfg.upload_sigma};
        pop.profiles.push_back(p);
    }
    pop.availability = Availability(cfg.clients, cfg.active_fraction, cfg.mean_active_period,
                                    derive_seed(seed, 0xA7A1));
    return pop;
}

}  // namespace afl::sim

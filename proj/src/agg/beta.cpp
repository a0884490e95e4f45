#include "afl/agg/beta.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "afl/errors.hpp"

namespace afl::agg {

BetaFamily parse_beta_family(const std::string& name) {
    if (name == "one_cosine") return BetaFamily::one_cosine;
    if (name == "linear") return BetaFamily::linear;
    if (name == "step") return BetaFamily::step;
    if (name == "constant") return BetaFamily::constant;
    throw ConfigError("unknown beta family '" + name + "'");
}

const char* to_string(BetaFamily f) {
    switch (f) {
        case BetaFamily::one_cosine: return "one_cosine";
        case BetaFamily::linear: return "linear";
        case BetaFamily::step: return "step";
        case BetaFamily::constant: return "constant";
    }
    return "?";
}

void BetaSchedule::validate() const {
    if (family == BetaFamily::constant) {
        if (!(value >= 0.0 && value <= 1.0)) throw ConfigError("constant beta must lie in [0, 1]");
        return;
    }
    if (!(transition > 0.0)) throw ConfigError("beta transition must be positive");
}

double beta(const BetaSchedule& schedule, double staleness) {
    schedule.validate();
    if (staleness < 0.0) throw PreconditionError("staleness must be non-negative");
    const double tau_star = schedule.transition;
    switch (schedule.family) {
        case BetaFamily::constant:
            return schedule.value;
        case BetaFamily::step:
            return staleness >= tau_star ? 1.0 : 0.0;
        case BetaFamily::linear:
            return std::min(staleness, tau_star) / tau_star;
        case BetaFamily::one_cosine: {
            const double r = std::min(staleness, tau_star) / tau_star;
            // (1 - cos(pi r)) / 2 written through sin so r = 0, 1/2, 1 give
            // exactly 0, 0.5, 1.
            return 0.5 + 0.5 * std::sin(std::numbers::pi * (r - 0.5));
        }
    }
    return 0.0;
}

}  // namespace afl::agg

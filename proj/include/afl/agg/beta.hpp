#pragma once

#include <string>

namespace afl::agg {

enum class BetaFamily { one_cosine, linear, step, constant };

BetaFamily parse_beta_family(const std::string& name);
const char* to_string(BetaFamily f);

// Staleness -> trust in the distilled update. All families are
// non-decreasing, bounded in [0, 1], and stay at 1 once they reach it.
struct BetaSchedule {
    BetaFamily family = BetaFamily::one_cosine;
    double transition = 10.0;  // tau*, staleness at which one-cosine/linear/step reach 1
    double value = 0.0;        // level of the constant family

    void validate() const;
};

// one_cosine: (1 - cos(pi * min(tau, tau*) / tau*)) / 2
// linear:     min(tau / tau*, 1)
// step:       0 below tau*, 1 from tau* on
// constant:   value
double beta(const BetaSchedule& schedule, double staleness);

}  // namespace afl::agg

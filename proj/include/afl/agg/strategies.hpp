#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "afl/agg/beta.hpp"
#include "afl/nn/model.hpp"
#include "afl/sim/client_update.hpp"

namespace afl::agg {

enum class Strategy { sync, async, fedbuff, afldw, revive, revive_dd };

Strategy parse_strategy(const std::string& name);
const char* to_string(Strategy s);
bool uses_beta(Strategy s);
bool uses_kd(Strategy s);

// Global model plus the count of server updates applied to it. Staleness is
// measured against `updates`.
struct ServerModel {
    nn::ParamVector params;
    std::uint64_t updates = 0;
};

struct BufferState {
    std::size_t capacity = 1;
    std::vector<nn::ParamVector> pending;
};

// x <- x + lr * delta
void agg_async(ServerModel& model, const sim::ClientUpdate& upd, double lr);

// Buffer the delta; once `capacity` are held apply x <- x + lr/B * sum and
// clear. Returns true when the model was updated.
bool agg_fedbuff(ServerModel& model, const sim::ClientUpdate& upd, BufferState& buffer, double lr);

// x <- x + lr * (1 - beta(tau)) * delta
void agg_afldw(ServerModel& model, const sim::ClientUpdate& upd, const BetaSchedule& schedule,
               double lr);

// x <- x + lr * ((1 - beta(tau)) * delta + beta(tau) * kd_update)
void agg_revive(ServerModel& model, const sim::ClientUpdate& upd, const BetaSchedule& schedule,
                double lr, const nn::ParamVector& kd_update);

// x <- x + lr * mean(deltas); one server update per round.
void agg_sync_round(ServerModel& model, std::span<const sim::ClientUpdate> updates, double lr);

// A synchronous round lasts until its slowest client reports.
double sync_round_duration(std::span<const sim::ClientUpdate> updates, double round_start);

// Parameter-form aggregation (1 - lr) * x + lr * trained, which avoids
// storing the delta. Equal to agg_async only when trained was derived from
// the current x.
nn::ParamVector interpolate_aggregate(const nn::ParamVector& x, const nn::ParamVector& trained,
                                      double lr);

}  // namespace afl::agg

#include "afl/agg/strategies.hpp"

#include <algorithm>

#include "afl/errors.hpp"

namespace afl::agg {

Strategy parse_strategy(const std::string& name) {
    if (name == "sync") return Strategy::sync;
    if (name == "async") return Strategy::async;
    if (name == "fedbuff") return Strategy::fedbuff;
    if (name == "afldw") return Strategy::afldw;
    if (name == "revive") return Strategy::revive;
    if (name == "revive_dd") return Strategy::revive_dd;
    throw ConfigError("unknown strategy '" + name + "'");
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::sync: return "sync";
        case Strategy::async: return "async";
        case Strategy::fedbuff: return "fedbuff";
        case Strategy::afldw: return "afldw";
        case Strategy::revive: return "revive";
        case Strategy::revive_dd: return "revive_dd";
    }
    return "?";
}

bool uses_beta(Strategy s) {
    return s == Strategy::afldw || s == Strategy::revive || s == Strategy::revive_dd;
}

bool uses_kd(Strategy s) { return s == Strategy::revive || s == Strategy::revive_dd; }

void agg_async(ServerModel& model, const sim::ClientUpdate& upd, double lr) {
    model.params.axpy(lr, upd.delta);
    ++model.updates;
}

bool agg_fedbuff(ServerModel& model, const sim::ClientUpdate& upd, BufferState& buffer, double lr) {
    nn::require_same_binding(model.params, upd.delta);
    if (buffer.capacity == 0) throw ConfigError("fedbuff buffer size must be positive");
    buffer.pending.push_back(upd.delta);
    if (buffer.pending.size() < buffer.capacity) return false;
    // Sum starts from the first buffered delta rather than zero.
    nn::ParamVector sum = buffer.pending.front();
    for (std::size_t k = 1; k < buffer.pending.size(); ++k) sum.axpy(1.0, buffer.pending[k]);
    model.params.axpy(lr / static_cast<double>(buffer.capacity), sum);
    ++model.updates;
    buffer.pending.clear();
    return true;
}

void agg_afldw(ServerModel& model, const sim::ClientUpdate& upd, const BetaSchedule& schedule, double lr) {
    const double b = beta(schedule, static_cast<double>(upd.staleness));
    nn::require_same_binding(model.params, upd.delta);
    auto x = model.params.values();
    const auto d = upd.delta.values();
    const double w = 1.0 - b;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += lr * (w * d[i]);
    ++model.updates;
}

void agg_revive(ServerModel& model, const sim::ClientUpdate& upd, const BetaSchedule& schedule,
                double lr, const nn::ParamVector& kd_update) {
    const double b = beta(schedule, static_cast<double>(upd.staleness));
    nn::require_same_binding(model.params, upd.delta);
    nn::require_same_binding(model.params, kd_update);
    auto x = model.params.values();
    const auto d = upd.delta.values();
    const auto k = kd_update.values();
    const double w = 1.0 - b;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += lr * (w * d[i] + b * k[i]);
    ++model.updates;
}

void agg_sync_round(ServerModel& model, std::span<const sim::ClientUpdate> updates, double lr) {
    if (updates.empty()) throw PreconditionError("synchronous round with no client updates");
    nn::ParamVector sum = updates.front().delta;
    for (std::size_t k = 1; k < updates.size(); ++k) sum.axpy(1.0, updates[k].delta);
    model.params.axpy(lr / static_cast<double>(updates.size()), sum);
    ++model.updates;
}

double sync_round_duration(std::span<const sim::ClientUpdate> updates, double round_start) {
    double end = round_start;
    for (const auto& u : updates) end = std::max(end, u.arrival_time);
    return end - round_start;
}

nn::ParamVector interpolate_aggregate(const nn::ParamVector& x, const nn::ParamVector& trained, double lr) {
    return nn::interpolate(x, trained, lr);
}

}  // namespace afl::agg

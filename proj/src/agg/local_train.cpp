#include "afl/agg/local_train.hpp"

#include <cmath>
#include <string>

#include "afl/errors.hpp"
#include "afl/nn/adam.hpp"
#include "afl/nn/losses.hpp"

namespace afl::agg {

LocalTrainResult local_train(const nn::ModelSpec& spec, const nn::ParamVector& start,
                             const data::Dataset& ds, const data::ClientPartition& part,
                             std::size_t client, const LocalTrainConfig& cfg, Rng& rng) {
    nn::require_bound_to(start, spec);
    LocalTrainResult res;
    res.trained = start;
    res.stats = nn::FeatureStats::zeros_for(spec);
    res.loss_trace.reserve(cfg.steps);
    nn::AdamState adam(start.size());

    for (std::size_t k = 0; k < cfg.steps; ++k) {
        const data::Batch b = data::sample_batch(ds, part, client, cfg.batch, rng);
        nn::ForwardResult fwd = nn::forward_tracked(spec, res.trained, b.inputs, res.stats);
        nn::LossGrad lg = nn::cross_entropy(fwd.logits, b.labels);
        if (!std::isfinite(lg.value)) {
            const int layer = nn::first_nonfinite_layer(fwd.trace);
            throw TrainingDivergenceError("client " + std::to_string(client) + " diverged at local step " +
                                              std::to_string(k),
                                          client, layer);
        }
        res.loss_trace.push_back(lg.value);
        nn::Gradients g = nn::backward(spec, res.trained, fwd.trace, lg.dlogits);
        nn::adam_step(res.trained.values(), g.params.values(), adam, cfg.lr);
    }
    res.delta = nn::difference(res.trained, start);
    return res;
}

}  // namespace afl::agg

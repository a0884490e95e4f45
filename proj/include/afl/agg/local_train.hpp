#pragma once

#include <cstddef>
#include <vector>

#include "afl/data/dataset.hpp"
#include "afl/data/partition.hpp"
#include "afl/nn/model.hpp"
#include "afl/rng.hpp"

namespace afl::agg {

struct LocalTrainConfig {
    std::size_t steps = 25;  // K
    double lr = 1e-3;        // client learning rate
    std::size_t batch = 32;
};

struct LocalTrainResult {
    nn::ParamVector trained;
    nn::ParamVector delta;  // trained - start
    nn::FeatureStats stats;
    std::vector<double> loss_trace;  // minibatch loss before each step
};

// K Adam steps of minibatch cross-entropy from `start`, fresh optimizer
// state. Running feature statistics are collected from these forward passes.
LocalTrainResult local_train(const nn::ModelSpec& spec, const nn::ParamVector& start,
                             const data::Dataset& ds, const data::ClientPartition& part,
                             std::size_t client, const LocalTrainConfig& cfg, Rng& rng);

}  // namespace afl::agg

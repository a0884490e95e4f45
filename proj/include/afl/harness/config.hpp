#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "afl/agg/beta.hpp"
#include "afl/agg/local_train.hpp"
#include "afl/agg/strategies.hpp"
#include "afl/dfkd/kd_revive.hpp"
#include "afl/nn/model.hpp"
#include "afl/sim/population.hpp"

namespace afl::harness {

struct DatasetConfig {
    std::size_t classes = 10;
    std::size_t dim = 32;
    double spread = 1.0;
    std::size_t train_samples = 2000;
    std::size_t test_samples = 400;
    // revive_dd only: public set size as a fraction of train_samples.
    double public_fraction = 1.0 / 6.0;
};

struct PartitionConfig {
    std::size_t clients = 40;
    double alpha = 0.5;
    bool iid = false;
    // When set, every client draws this many samples with replacement.
    std::optional<std::size_t> samples_per_client;
};

struct ModelConfig {
    std::vector<std::size_t> hidden{64};
    nn::Activation activation = nn::Activation::relu;
    // Layers whose pre-activation statistics feed the feature loss; all
    // hidden layers when unset.
    std::optional<std::vector<std::size_t>> tracked_layers;
};

struct TrainConfig {
    double local_lr = 1e-3;
    double server_lr = 1.0;
    std::size_t local_steps = 25;
    std::size_t batch = 32;
    std::size_t concurrency = 4;  // N_a
    std::uint64_t max_updates = 0;  // T; 0 means bounded by the horizon only
};

struct StrategyConfig {
    agg::Strategy name = agg::Strategy::async;
    std::size_t buffer_size = 1;
    agg::BetaSchedule beta;
};

struct EvaluationConfig {
    double interval = 5.0;
    double horizon = 1000.0;
};

struct ExperimentConfig {
    std::string label;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    DatasetConfig dataset;
    PartitionConfig partition;
    sim::PopulationConfig population;
    ModelConfig model;
    TrainConfig train;
    StrategyConfig strategy;
    dfkd::KdReviveConfig dfkd;
    EvaluationConfig evaluation;
    std::filesystem::path output_dir = "runs";
    bool write_trace = true;

    nn::ModelSpec model_spec() const;
    agg::LocalTrainConfig local_train() const;
    void validate() const;
};

// Strict parse: unknown keys, keys that do not apply to the chosen strategy,
// and out-of-range values raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace afl::harness

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "afl/data/dataset.hpp"
#include "afl/dfkd/distill.hpp"
#include "afl/dfkd/kd_buffer.hpp"
#include "afl/dfkd/synthesis.hpp"
#include "afl/nn/model.hpp"
#include "afl/rng.hpp"

namespace afl::dfkd {

struct KdReviveConfig {
    std::size_t buffer_capacity = 8;  // B_KD
    std::size_t synthetic_capacity = 512;
    GeneratorConfig generator;
    SynthesisConfig synthesis;
    DistillConfig distill;

    void validate() const;
};

// Server-side distillation state that lives for a whole run.
struct KdReviveState {
    nn::ModelSpec spec;
    std::size_t num_classes = 0;
    KdReviveConfig cfg;
    KdBuffer buffer;
    Generator generator;
    SyntheticDataset pool;
    Rng rng;
    // Distill from a fixed real dataset instead of synthesising (REVIVE-DD).
    bool data_driven = false;

    std::size_t warnings = 0;
    std::string last_warning;
    bool log_warnings = true;

    std::optional<SynthesisResult> last_synthesis;
};

KdReviveState make_kd_state(const nn::ModelSpec& spec, std::size_t num_classes,
                            const KdReviveConfig& cfg, std::uint64_t seed);

// Data-driven variant: the pool is `public_data`, fixed for the run.
KdReviveState make_kd_state_data_driven(const nn::ModelSpec& spec, const data::Dataset& public_data,
                                        const KdReviveConfig& cfg, std::uint64_t seed);

// Buffer push, synthesis + append, meta-update, distillation; returns the
// distilled update for this arrival. Any failure yields a zero update and a
// recorded warning.
nn::ParamVector kd_revive(KdReviveState& state, const nn::ParamVector& teacher,
                          const nn::FeatureStats& stats, const data::LabelHistogram& labels,
                          const nn::ParamVector& current_x);

}  // namespace afl::dfkd

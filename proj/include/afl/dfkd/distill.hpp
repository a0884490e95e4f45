#pragma once

#include <cstddef>
#include <vector>

#include "afl/data/partition.hpp"
#include "afl/dfkd/kd_buffer.hpp"
#include "afl/nn/model.hpp"
#include "afl/rng.hpp"

namespace afl::dfkd {

struct DistillConfig {
    std::size_t steps = 10;  // K_KD
    double lr = 3e-3;
    std::size_t batch = 32;
    double temperature = 1.0;

    void validate() const;
};

// Indices into `pool` drawn with probability proportional to the teacher's
// share of each sample's label: without replacement when enough samples have
// positive weight, with replacement otherwise. Throws SamplingExhausted when
// no sample has positive weight.
std::vector<std::size_t> sample_for_teacher(const SyntheticDataset& pool,
                                            const data::LabelHistogram& labels,
                                            std::size_t batch, Rng& rng);

struct DistillResult {
    nn::ParamVector delta;           // student_after - student_init
    std::vector<double> loss_trace;  // mean teacher KL before each step
    std::size_t uniform_fallbacks = 0;
};

// K_KD Adam steps on the mean over teachers of KL(teacher(u_i) || student(u_i)).
DistillResult distill(const nn::ModelSpec& spec, const nn::ParamVector& student_init,
                      const KdBuffer& buf, const SyntheticDataset& pool, const DistillConfig& cfg,
                      Rng& rng);

}  // namespace afl::dfkd

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "afl/dfkd/kd_buffer.hpp"
#include "afl/nn/model.hpp"
#include "afl/rng.hpp"

namespace afl::dfkd {

struct GeneratorConfig {
    std::size_t latent_dim = 16;
    std::size_t hidden = 64;
    double output_scale = 2.0;  // tanh output is multiplied by this
};

// latent -> dense(hidden, relu) -> dense(d, tanh) -> * output_scale
struct Generator {
    nn::ModelSpec spec;
    nn::ParamVector params;
    double output_scale = 1.0;

    std::size_t latent_dim() const { return spec.input_dim; }
    std::size_t output_dim() const { return spec.output_dim(); }
};

Generator make_generator(const GeneratorConfig& cfg, std::size_t output_dim, Rng& rng);

struct SynthesisConfig {
    std::size_t steps = 2;       // K_synth
    double lr = 1e-3;            // joint Adam rate on (z, phi')
    double w_target = 1.0;
    double w_feature = 3e-3;
    double w_adv = 0.1;
    double meta_lambda = 0.5;    // phi <- (1 - lambda) phi' + lambda phi
    std::size_t batch = 64;

    void validate() const;
};

struct SynthLoss {
    double total = 0.0;
    double target = 0.0;
    double feature = 0.0;
    double adv = 0.0;
};

struct SynthLossEval {
    SynthLoss loss;
    nn::Tensor dinput;  // dL/dgenerated, empty unless requested
};

// Weighted synthesis objective over every buffered teacher. Per sample the
// teachers' losses are averaged with teacher_weights of the sample's target
// class; the student is treated as a constant.
//   target  : weighted cross-entropy of each teacher against the target label
//   feature : sum over tracked layers of |mu_batch - mu_run|^2 + |var_batch - var_run|^2,
//             each teacher weighted by its mean per-sample weight
//   adv     : -[argmax teacher == argmax student] * KL(teacher || student)
SynthLossEval synth_loss(const nn::Tensor& generated, std::span<const int> targets,
                         const KdBuffer& buf, const nn::ModelSpec& spec,
                         const nn::ParamVector& student, const SynthesisConfig& cfg,
                         bool want_grad = true);

nn::Tensor generate(const Generator& gen, const nn::ParamVector& params, const nn::Tensor& z);

struct SynthesisResult {
    nn::Tensor samples;
    std::vector<int> labels;
    nn::ParamVector adapted;         // phi' after the last step
    std::vector<double> loss_trace;  // loss of state k, k = 0..K_synth
    std::size_t best_step = 0;
    SynthLoss best;
};

// Target labels for a batch of m: consecutive classes from a random offset,
// so per-class counts differ by at most one.
std::vector<int> assign_targets(std::size_t m, std::size_t classes, Rng& rng);

// Fresh latent batch, K_synth joint Adam steps on (z, phi'), and the
// generated batch of the lowest-loss state (earliest on ties).
SynthesisResult synthesize(const Generator& gen, const KdBuffer& buf, const nn::ModelSpec& spec,
                           const nn::ParamVector& student, const SynthesisConfig& cfg, Rng& rng);

// Reptile-style interpolation phi <- (1 - lambda) * adapted + lambda * phi.
void meta_update(Generator& gen, const nn::ParamVector& adapted, double lambda);

}  // namespace afl::dfkd

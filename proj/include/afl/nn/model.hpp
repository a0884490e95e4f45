#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "afl/nn/tensor.hpp"
#include "afl/rng.hpp"

namespace afl::nn {

enum class Activation { identity, relu, tanh };

struct LayerSpec {
    std::size_t out_dim = 0;
    Activation activation = Activation::identity;
    bool track_stats = false;
};

// Feed-forward stack of dense layers. Parameters are laid out layer by layer
// as W (out x in, row-major) followed by b (out).
struct ModelSpec {
    std::size_t input_dim = 0;
    std::vector<LayerSpec> layers;

    std::size_t output_dim() const;
    std::size_t layer_input_dim(std::size_t layer) const;
    std::size_t weight_offset(std::size_t layer) const;
    std::size_t bias_offset(std::size_t layer) const;
    std::size_t param_count() const;
    std::uint64_t hash() const;
    bool any_tracked() const;

    // Throws ConfigError on empty layers or output dim < 2.
    void validate() const;

    // Classifier MLP: hidden layers use `hidden_act` and are flagged for
    // feature statistics, the output layer is linear and untracked.
    static ModelSpec mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                         std::size_t classes, Activation hidden_act = Activation::relu);
};

class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(const ModelSpec& spec);  // zeros
    ParamVector(std::uint64_t spec_hash, std::vector<double> values);

    std::uint64_t spec_hash() const { return spec_hash_; }
    std::size_t size() const { return values_.size(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    // this += a * x
    void axpy(double a, const ParamVector& x);
    void scale(double a);
    bool all_finite() const;
    double norm() const;

    bool bitwise_equal(const ParamVector& other) const;

private:
    std::uint64_t spec_hash_ = 0;
    std::vector<double> values_;
};

void require_same_binding(const ParamVector& a, const ParamVector& b);
void require_bound_to(const ParamVector& p, const ModelSpec& spec);

// (1 - w) * a + w * b
ParamVector interpolate(const ParamVector& a, const ParamVector& b, double w);
ParamVector difference(const ParamVector& a, const ParamVector& b);  // a - b

// Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases.
ParamVector init_params(const ModelSpec& spec, Rng& rng);

struct LayerStats {
    std::size_t layer = 0;
    std::vector<double> mean;
    std::vector<double> var;
};

// Per-unit pre-activation statistics of every tracked layer.
struct FeatureStats {
    std::vector<LayerStats> layers;
    std::uint64_t updates = 0;

    static FeatureStats zeros_for(const ModelSpec& spec);
};

inline constexpr double kStatsMomentum = 0.1;  // EMA decay 0.9

// Intermediate activations kept for backprop. inputs[l] feeds layer l,
// preacts[l] is its affine output before the activation.
struct ForwardTrace {
    std::vector<Tensor> inputs;
    std::vector<Tensor> preacts;
};

struct ForwardResult {
    Tensor logits;
    FeatureStats batch_stats;
    ForwardTrace trace;
};

// Pure forward pass; batch statistics of tracked layers are always reported.
ForwardResult forward(const ModelSpec& spec, const ParamVector& params, const Tensor& batch);

// Forward pass that also folds the batch statistics into `running`
// (first update copies, later updates use an EMA with kStatsMomentum).
ForwardResult forward_tracked(const ModelSpec& spec, const ParamVector& params,
                              const Tensor& batch, FeatureStats& running);

void update_running_stats(FeatureStats& running, const FeatureStats& batch);

struct Gradients {
    ParamVector params;
    Tensor input;  // empty unless requested
};

// Reverse pass given dL/dlogits. `preact_grads`, when non-empty, holds one
// tensor per layer (empty tensors allowed) added to dL/dpreact of that layer,
// which is how statistics-matching losses inject their gradient.
Gradients backward(const ModelSpec& spec, const ParamVector& params, const ForwardTrace& trace,
                   const Tensor& dlogits, std::span<const Tensor> preact_grads = {},
                   bool want_input_grad = false);

// Index of the first layer whose pre-activations contain a non-finite value,
// or the last layer if only the loss itself is bad.
int first_nonfinite_layer(const ForwardTrace& trace);

}  // namespace afl::nn

#include "afl/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include <boost/random/uniform_real_distribution.hpp>

#include "afl/errors.hpp"
#include "afl/nn/kernels.hpp"

namespace afl::nn {

std::size_t ModelSpec::output_dim() const {
    return layers.empty() ? 0 : layers.back().out_dim;
}

std::size_t ModelSpec::layer_input_dim(std::size_t layer) const {
    return layer == 0 ? input_dim : layers[layer - 1].out_dim;
}

std::size_t ModelSpec::weight_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l)
        off += layers[l].out_dim * layer_input_dim(l) + layers[l].out_dim;
    return off;
}

std::size_t ModelSpec::bias_offset(std::size_t layer) const {
    return weight_offset(layer) + layers[layer].out_dim * layer_input_dim(layer);
}

std::size_t ModelSpec::param_count() const { return weight_offset(layers.size()); }

std::uint64_t ModelSpec::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    };
    mix(input_dim);
    for (const auto& l : layers) {
        mix(l.out_dim);
        mix(static_cast<std::uint64_t>(l.activation));
    }
    return h;
}

bool ModelSpec::any_tracked() const {
    return std::any_of(layers.begin(), layers.end(), [](const LayerSpec& l) { return l.track_stats; });
}

void ModelSpec::validate() const {
    if (input_dim == 0) throw ConfigError("model input dim must be positive");
    if (layers.empty()) throw ConfigError("model needs at least one layer");
    for (const auto& l : layers)
        if (l.out_dim == 0) throw ConfigError("layer width must be positive");
    if (output_dim() < 2) throw ConfigError("model output dim must be >= 2");
}

ModelSpec ModelSpec::mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                         std::size_t classes, Activation hidden_act) {
    ModelSpec spec;
    spec.input_dim = input_dim;
    for (std::size_t h : hidden) spec.layers.push_back({h, hidden_act, true});
    spec.layers.push_back({classes, Activation::identity, false});
    return spec;
}

ParamVector::ParamVector(const ModelSpec& spec)
    : spec_hash_(spec.hash()), values_(spec.param_count(), 0.0) {}

ParamVector::ParamVector(std::uint64_t spec_hash, std::vector<double> values)
    : spec_hash_(spec_hash), values_(std::move(values)) {}

void ParamVector::axpy(double a, const ParamVector& x) {
    require_same_binding(*this, x);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
}

void ParamVector::scale(double a) {
    for (double& v : values_) v *= a;
}

bool ParamVector::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ParamVector::norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
}

bool ParamVector::bitwise_equal(const ParamVector& other) const {
    return spec_hash_ == other.spec_hash_ && values_.size() == other.values_.size() &&
           (values_.empty() ||
            std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(double)) == 0);
}

void require_same_binding(const ParamVector& a, const ParamVector& b) {
    if (a.spec_hash() != b.spec_hash() || a.size() != b.size())
        throw BindingError("parameter vectors are bound to different model specs");
}

void require_bound_to(const ParamVector& p, const ModelSpec& spec) {
    if (p.spec_hash() != spec.hash() || p.size() != spec.param_count())
        throw BindingError("parameter vector is not bound to this model spec");
}

ParamVector interpolate(const ParamVector& a, const ParamVector& b, double w) {
    require_same_binding(a, b);
    if (w == 0.0) return a;
    if (w == 1.0) return b;
    std::vector<double> out(a.size());
    const double wa = 1.0 - w;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = wa * a[i] + w * b[i];
    return ParamVector(a.spec_hash(), std::move(out));
}

ParamVector difference(const ParamVector& a, const ParamVector& b) {
    require_same_binding(a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    return ParamVector(a.spec_hash(), std::move(out));
}

ParamVector init_params(const ModelSpec& spec, Rng& rng) {
    ParamVector p(spec);
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const std::size_t in = spec.layer_input_dim(l);
        const std::size_t out = spec.layers[l].out_dim;
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        boost::random::uniform_real_distribution<double> dist(-limit, limit);
        const std::size_t off = spec.weight_offset(l);
        for (std::size_t k = 0; k < in * out; ++k) p[off + k] = dist(rng);
    }
    return p;
}

FeatureStats FeatureStats::zeros_for(const ModelSpec& spec) {
    FeatureStats fs;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        if (!spec.layers[l].track_stats) continue;
        const std::size_t n = spec.layers[l].out_dim;
        fs.layers.push_back({l, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)});
    }
    return fs;
}

namespace {

double activate(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::identity: break;
    }
    return x;
}

double activation_slope(Activation a, double pre) {
    switch (a) {
        case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            const double t = std::tanh(pre);
            return 1.0 - t * t;
        }
        case Activation::identity: break;
    }
    return 1.0;
}

}  // namespace

ForwardResult forward(const ModelSpec& spec, const ParamVector& params, const Tensor& batch) {
    require_bound_to(params, spec);
    if (batch.shape.size() != 2 || batch.cols() != spec.input_dim) {
        throw DimensionError("forward: batch inner dim " + std::to_string(batch.cols()) +
                             " != model input dim " + std::to_string(spec.input_dim));
    }
    const std::size_t rows = batch.rows();
    const auto p = params.values();

    ForwardResult res;
    res.batch_stats.updates = 1;
    res.trace.inputs.reserve(spec.layers.size());
    res.trace.preacts.reserve(spec.layers.size());

    Tensor current = batch;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const auto& layer = spec.layers[l];
        const std::size_t in = spec.layer_input_dim(l);
        Tensor pre(rows, layer.out_dim);
        kernels::linear_forward(current.values, rows, in,
                                p.subspan(spec.weight_offset(l), layer.out_dim * in),
                                p.subspan(spec.bias_offset(l), layer.out_dim), layer.out_dim,
                                pre.values);
        if (layer.track_stats && rows > 0) {
            LayerStats ls{l, std::vector<double>(layer.out_dim), std::vector<double>(layer.out_dim)};
            kernels::column_moments(pre.values, rows, layer.out_dim, ls.mean, ls.var);
            res.batch_stats.layers.push_back(std::move(ls));
        }
        Tensor post(rows, layer.out_dim);
        for (std::size_t k = 0; k < pre.values.size(); ++k)
            post.values[k] = activate(layer.activation, pre.values[k]);
        res.trace.inputs.push_back(std::move(current));
        res.trace.preacts.push_back(std::move(pre));
        current = std::move(post);
    }
    res.logits = std::move(current);
    return res;
}

void update_running_stats(FeatureStats& running, const FeatureStats& batch) {
    if (running.updates == 0 || running.layers.size() != batch.layers.size()) {
        running.layers = batch.layers;
        running.updates = 1;
        return;
    }
    for (std::size_t k = 0; k < batch.layers.size(); ++k) {
        auto& r = running.layers[k];
        const auto& b = batch.layers[k];
        for (std::size_t u = 0; u < b.mean.size(); ++u) {
            r.mean[u] = (1.0 - kStatsMomentum) * r.mean[u] + kStatsMomentum * b.mean[u];
            r.var[u] = (1.0 - kStatsMomentum) * r.var[u] + kStatsMomentum * b.var[u];
        }
    }
    ++running.updates;
}

ForwardResult forward_tracked(const ModelSpec& spec, const ParamVector& params,
                              const Tensor& batch, FeatureStats& running) {
    ForwardResult res = forward(spec, params, batch);
    update_running_stats(running, res.batch_stats);
    return res;
}

Gradients backward(const ModelSpec& spec, const ParamVector& params, const ForwardTrace& trace,
                   const Tensor& dlogits, std::span<const Tensor> preact_grads,
                   bool want_input_grad) {
    require_bound_to(params, spec);
    const std::size_t n_layers = spec.layers.size();
    if (trace.preacts.size() != n_layers) throw DimensionError("backward: trace/spec mismatch");
    const std::size_t rows = trace.inputs.front().rows();
    if (dlogits.rows() != rows || dlogits.cols() != spec.output_dim())
        throw DimensionError("backward: dlogits shape mismatch");
    if (!preact_grads.empty() && preact_grads.size() != n_layers)
        throw DimensionError("backward: need one preact gradient slot per layer");

    Gradients out{ParamVector(spec), {}};
    const auto p = params.values();
    auto g = out.params.values();

    Tensor upstream = dlogits;
    for (std::size_t l = n_layers; l-- > 0;) {
        const auto& layer = spec.layers[l];
        const std::size_t in = spec.layer_input_dim(l);
        const Tensor& pre = trace.preacts[l];
        Tensor dpre(rows, layer.out_dim);
        for (std::size_t k = 0; k < dpre.values.size(); ++k)
            dpre.values[k] = upstream.values[k] * activation_slope(layer.activation, pre.values[k]);
        if (!preact_grads.empty() && !preact_grads[l].empty()) {
            if (preact_grads[l].size() != dpre.size())
                throw DimensionError("backward: preact gradient shape mismatch");
            for (std::size_t k = 0; k < dpre.values.size(); ++k) dpre.values[k] += preact_grads[l].values[k];
        }
        kernels::linear_backward_params(dpre.values, trace.inputs[l].values, rows, in, layer.out_dim,
                                        g.subspan(spec.weight_offset(l), layer.out_dim * in),
                                        g.subspan(spec.bias_offset(l), layer.out_dim));
        if (l > 0 || want_input_grad) {
            Tensor din(rows, in);
            kernels::linear_backward_input(dpre.values,
                                           p.subspan(spec.weight_offset(l), layer.out_dim * in),
                                           rows, in, layer.out_dim, din.values);
            upstream = std::move(din);
        }
    }
    if (want_input_grad) out.input = std::move(upstream);
    return out;
}

int first_nonfinite_layer(const ForwardTrace& trace) {
    for (std::size_t l = 0; l < trace.preacts.size(); ++l)
        if (!trace.preacts[l].all_finite()) return static_cast<int>(l);
    return static_cast<int>(trace.preacts.size()) - 1;
}

}  // namespace afl::nn

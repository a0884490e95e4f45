#include "afl/dfkd/synthesis.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "afl/errors.hpp"
#include "afl/nn/adam.hpp"
#include "afl/nn/losses.hpp"

namespace afl::dfkd {

Generator make_generator(const GeneratorConfig& cfg, std::size_t output_dim, Rng& rng) {
    if (cfg.latent_dim == 0 || cfg.hidden == 0) throw ConfigError("generator dims must be positive");
    if (!(cfg.output_scale > 0.0)) throw ConfigError("generator output scale must be positive");
    Generator g;
    g.spec.input_dim = cfg.latent_dim;
    g.spec.layers = {{cfg.hidden, nn::Activation::relu, false},
                     {output_dim, nn::Activation::tanh, false}};
    g.params = nn::init_params(g.spec, rng);
    g.output_scale = cfg.output_scale;
    return g;
}

void SynthesisConfig::validate() const {
    if (w_target < 0.0 || w_feature < 0.0 || w_adv < 0.0) throw ConfigError("synthesis loss weights must be >= 0");
    if (!(meta_lambda >= 0.0 && meta_lambda <= 1.0)) throw ConfigError("meta lambda must lie in [0, 1]");
    if (lr < 0.0) throw ConfigError("synthesis lr must be >= 0");
    if (batch == 0) throw ConfigError("synthesis batch must be positive");
}

SynthLossEval synth_loss(const nn::Tensor& generated, std::span<const int> targets, const KdBuffer& buf,
                         const nn::ModelSpec& spec, const nn::ParamVector& student,
                         const SynthesisConfig& cfg, bool want_grad) {
    if (buf.empty()) throw PreconditionError("synthesis loss needs at least one teacher");
    const std::size_t m = generated.rows();
    if (m == 0 || targets.size() != m) throw DimensionError("synthesis loss: targets must match batch");
    if (generated.cols() != spec.input_dim) throw DimensionError("synthesis loss: generated dim != model input");
    const std::size_t classes = spec.output_dim();
    const double inv_m = 1.0 / static_cast<double>(m);

    const nn::Tensor student_logits = nn::forward(spec, student, generated).logits;
    std::vector<std::size_t> student_top(m);
    for (std::size_t i = 0; i < m; ++i) student_top[i] = nn::argmax(student_logits.row(i));

    std::vector<std::vector<double>> class_w(classes);
    for (int y : targets) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes) throw DimensionError("synthesis loss: target out of range");
        auto& w = class_w[static_cast<std::size_t>(y)];
        if (w.empty()) w = teacher_weights(buf, static_cast<std::size_t>(y));
    }

    SynthLossEval out;
    if (want_grad) out.dinput = nn::Tensor(m, spec.input_dim);
    std::vector<double> kl_grad(classes);

    for (std::size_t j = 0; j < buf.size(); ++j) {
        const TeacherEntry& teacher = buf[j];
        nn::ForwardResult fwd = nn::forward(spec, teacher.params, generated);
        nn::Tensor dlogits(m, classes);
        double omega = 0.0;  // mean per-sample weight of this teacher

        for (std::size_t i = 0; i < m; ++i) {
            const auto y = static_cast<std::size_t>(targets[i]);
            const double w = class_w[y][j];
            omega += w * inv_m;
            if (w == 0.0) continue;
            auto t = fwd.logits.row(i);
            const auto p = nn::softmax_row(t);
            out.loss.target += w * inv_m * -std::log(std::max(p[y], std::numeric_limits<double>::min()));
            auto g = dlogits.row(i);
            for (std::size_t c = 0; c < classes; ++c) g[c] = cfg.w_target * w * inv_m * p[c];
            g[y] -= cfg.w_target * w * inv_m;

            if (nn::argmax(t) == student_top[i]) {
                auto s = student_logits.row(i);
                out.loss.adv -= w * inv_m * nn::kl_row(t, s, 1.0);
                nn::kl_row_teacher_grad(t, s, 1.0, kl_grad);
                for (std::size_t c = 0; c < classes; ++c) g[c] -= cfg.w_adv * w * inv_m * kl_grad[c];
            }
        }

        std::vector<nn::Tensor> preact_grads;
        if (teacher.stats.updates > 0 && teacher.stats.layers.size() == fwd.batch_stats.layers.size()) {
            if (want_grad) preact_grads.resize(spec.layers.size());
            for (std::size_t k = 0; k < fwd.batch_stats.layers.size(); ++k) {
                const auto& b = fwd.batch_stats.layers[k];
                const auto& r = teacher.stats.layers[k];
                double f = 0.0;
                for (std::size_t u = 0; u < b.mean.size(); ++u) {
                    const double dm = b.mean[u] - r.mean[u];
                    const double dv = b.var[u] - r.var[u];
                    f += dm * dm + dv * dv;
                }
                out.loss.feature += omega * f;
                if (!want_grad || omega == 0.0) continue;
                const nn::Tensor& pre = fwd.trace.preacts[b.layer];
                nn::Tensor gpre(m, b.mean.size());
                const double scale = cfg.w_feature * omega * inv_m;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t u = 0; u < b.mean.size(); ++u) {
                        const double dm = b.mean[u] - r.mean[u];
                        const double dv = b.var[u] - r.var[u];
                        gpre(i, u) = scale * (2.0 * dm + 4.0 * dv * (pre(i, u) - b.mean[u]));
                    }
                preact_grads[b.layer] = std::move(gpre);
            }
        }

        if (want_grad) {
            nn::Gradients g = nn::backward(spec, teacher.params, fwd.trace, dlogits, preact_grads, true);
            for (std::size_t k = 0; k < out.dinput.size(); ++k) out.dinput.values[k] += g.input.values[k];
        }
    }
    out.loss.total = cfg.w_target * out.loss.target + cfg.w_feature * out.loss.feature + cfg.w_adv * out.loss.adv;
    return out;
}

nn::Tensor generate(const Generator& gen, const nn::ParamVector& params, const nn::Tensor& z) {
    nn::Tensor x = nn::forward(gen.spec, params, z).logits;
    for (double& v : x.values) v *= gen.output_scale;
    return x;
}

std::vector<int> assign_targets(std::size_t m, std::size_t classes, Rng& rng) {
    boost::random::uniform_int_distribution<std::size_t> pick(0, classes - 1);
    const std::size_t offset = pick(rng);
    std::vector<int> y(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = static_cast<int>((offset + i) % classes);
    return y;
}

SynthesisResult synthesize(const Generator& gen, const KdBuffer& buf, const nn::ModelSpec& spec,
                           const nn::ParamVector& student, const SynthesisConfig& cfg, Rng& rng) {
    cfg.validate();
    if (buf.empty()) throw PreconditionError("synthesis needs at least one teacher");
    const std::size_t m = cfg.batch;
    const std::size_t latent = gen.latent_dim();
    const std::size_t nz = m * latent;

    SynthesisResult res;
    res.labels = assign_targets(m, spec.output_dim(), rng);

    // Joint variable: latent batch followed by the generator copy phi'.
    std::vector<double> joint(nz + gen.params.size());
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < nz; ++k) joint[k] = normal(rng);
    std::copy(gen.params.values().begin(), gen.params.values().end(), joint.begin() + static_cast<std::ptrdiff_t>(nz));
    nn::AdamState adam(joint.size());

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t step = 0; step <= cfg.steps; ++step) {
        nn::Tensor z({m, latent}, std::vector<double>(joint.begin(), joint.begin() + static_cast<std::ptrdiff_t>(nz)));
        nn::ParamVector phi(gen.params.spec_hash(),
                            std::vector<double>(joint.begin() + static_cast<std::ptrdiff_t>(nz), joint.end()));
        nn::ForwardResult gfwd = nn::forward(gen.spec, phi, z);
        nn::Tensor x = gfwd.logits;
        for (double& v : x.values) v *= gen.output_scale;

        const bool need_grad = step < cfg.steps;
        SynthLossEval ev = synth_loss(x, res.labels, buf, spec, student, cfg, need_grad);
        if (!std::isfinite(ev.loss.total))
            throw SynthesisDivergenceError("non-finite synthesis loss at step " + std::to_string(step),
                                           nn::first_nonfinite_layer(gfwd.trace));
        res.loss_trace.push_back(ev.loss.total);
        if (ev.loss.total < best) {
            best = ev.loss.total;
            res.best_step = step;
            res.best = ev.loss;
            res.samples = x;
        }
        if (!need_grad) {
            res.adapted = std::move(phi);
            break;
        }
        for (double& v : ev.dinput.values) v *= gen.output_scale;
        nn::Gradients gb = nn::backward(gen.spec, phi, gfwd.trace, ev.dinput, {}, true);
        std::vector<double> grad(joint.size());
        std::copy(gb.input.values.begin(), gb.input.values.end(), grad.begin());
        std::copy(gb.params.values().begin(), gb.params.values().end(), grad.begin() + static_cast<std::ptrdiff_t>(nz));
        nn::adam_step(joint, grad, adam, cfg.lr);
    }
    return res;
}

void meta_update(Generator& gen, const nn::ParamVector& adapted, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("meta lambda must lie in [0, 1]");
    nn::require_same_binding(gen.params, adapted);
    if (lambda == 1.0) return;
    if (lambda == 0.0) {
        gen.params = adapted;
        return;
    }
    gen.params = nn::interpolate(adapted, gen.params, lambda);
}

}  // namespace afl::dfkd

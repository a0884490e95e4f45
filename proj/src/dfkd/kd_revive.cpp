#include "afl/dfkd/kd_revive.hpp"

#include <iostream>

#include "afl/errors.hpp"

namespace afl::dfkd {

void KdReviveConfig::validate() const {
    if (buffer_capacity == 0) throw ConfigError("KD buffer capacity must be positive");
    if (synthetic_capacity == 0) throw ConfigError("synthetic dataset capacity must be positive");
    synthesis.validate();
    distill.validate();
}

KdReviveState make_kd_state(const nn::ModelSpec& spec, std::size_t num_classes, const KdReviveConfig& cfg,
                            std::uint64_t seed) {
    cfg.validate();
    Rng gen_rng = make_rng(seed, 0x6E4);
    KdReviveState st;
    st.spec = spec;
    st.num_classes = num_classes;
    st.cfg = cfg;
    st.buffer = KdBuffer(cfg.buffer_capacity, spec.hash());
    st.generator = make_generator(cfg.generator, spec.input_dim, gen_rng);
    st.pool = SyntheticDataset(cfg.synthetic_capacity, spec.input_dim);
    st.rng = make_rng(seed, 0x4D);
    return st;
}

KdReviveState make_kd_state_data_driven(const nn::ModelSpec& spec, const data::Dataset& public_data,
                                        const KdReviveConfig& cfg, std::uint64_t seed) {
    if (public_data.size() == 0) throw ConfigError("data-driven distillation needs public data");
    KdReviveConfig c = cfg;
    c.synthetic_capacity = public_data.size();
    KdReviveState st = make_kd_state(spec, public_data.num_classes, c, seed);
    st.data_driven = true;
    st.pool.append(public_data.inputs, public_data.labels);
    return st;
}

nn::ParamVector kd_revive(KdReviveState& state, const nn::ParamVector& teacher, const nn::FeatureStats& stats,
                          const data::LabelHistogram& labels, const nn::ParamVector& current_x) {
    try {
        state.buffer.push(teacher, stats, labels);
        if (!state.data_driven) {
            SynthesisResult syn = synthesize(state.generator, state.buffer, state.spec, current_x,
                                             state.cfg.synthesis, state.rng);
            state.pool.append(syn.samples, syn.labels);
            meta_update(state.generator, syn.adapted, state.cfg.synthesis.meta_lambda);
            state.last_synthesis = std::move(syn);
        }
        DistillResult dr = distill(state.spec, current_x, state.buffer, state.pool, state.cfg.distill, state.rng);
        if (!dr.delta.all_finite()) throw NumericError("distilled update is not finite", -1);
        return std::move(dr.delta);
    } catch (const Error& e) {
        ++state.warnings;
        state.last_warning = e.what();
        if (state.log_warnings)
            std::cerr << "warning: KD update dropped, falling back to parameter aggregation: " << e.what() << '\n';
        return nn::ParamVector(state.spec);
    }
}

}  // namespace afl::dfkd

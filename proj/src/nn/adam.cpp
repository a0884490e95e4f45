#include "afl/nn/adam.hpp"

#include <cmath>
#include <string>

#include "afl/errors.hpp"

namespace afl::nn {

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, double lr) {
    if (params.size() != grad.size()) throw DimensionError("adam_step: gradient length mismatch");
    if (state.m.empty() && state.v.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw DimensionError("adam_step: moment buffers do not match parameter length");
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad[i])) throw NumericError("adam_step: non-finite gradient at " + std::to_string(i), -1);

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

ParamVector adam_step(const ParamVector& params, const ParamVector& grad, AdamState& state, double lr) {
    require_same_binding(params, grad);
    ParamVector out = params;
    adam_step(out.values(), grad.values(), state, lr);
    return out;
}

}  // namespace afl::nn

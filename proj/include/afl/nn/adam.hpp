#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "afl/nn/model.hpp"

namespace afl::nn {

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected Adam update in place. Throws NumericError on a non-finite
// gradient entry and DimensionError on length mismatch.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               double lr);

ParamVector adam_step(const ParamVector& params, const ParamVector& grad, AdamState& state,
                      double lr);

}  // namespace afl::nn

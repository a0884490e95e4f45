#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "afl/nn/losses.hpp"
#include "afl/nn/model.hpp"
#include "afl/rng.hpp"

namespace afl::test {

inline nn::Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    boost::random::normal_distribution<double> n(0.0, scale);
    nn::Tensor t(rows, cols);
    for (auto& v : t.values) v = n(rng);
    return t;
}

inline nn::ParamVector random_params(const nn::ModelSpec& spec, Rng& rng, double scale = 0.5) {
    boost::random::normal_distribution<double> n(0.0, scale);
    nn::ParamVector p(spec);
    for (auto& v : p.values()) v = n(rng);
    return p;
}

struct FdReport {
    std::size_t checked = 0;
    std::size_t passed = 0;
    double pass_rate() const { return checked ? static_cast<double>(passed) / checked : 1.0; }
};

// Central differences of `f` around `x` compared with `analytic`. A coordinate
// passes with relative error below `tol`, or when both values are below
// `abs_floor` in magnitude (relative error is meaningless at zero).
template <typename F>
FdReport finite_difference_check(std::vector<double> x, const std::vector<double>& analytic, F&& f,
                                 double h = 1e-5, double tol = 1e-4, double abs_floor = 1e-7) {
    FdReport r;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double up = f(x);
        x[i] = orig - h;
        const double down = f(x);
        x[i] = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic[i];
        const double denom = std::max(std::abs(a), std::abs(numeric));
        ++r.checked;
        if (denom < abs_floor || std::abs(a - numeric) / denom < tol) ++r.passed;
    }
    return r;
}

}  // namespace afl::test

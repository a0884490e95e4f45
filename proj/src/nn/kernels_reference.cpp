#include "afl/nn/kernels.hpp"

namespace afl::kernels::reference {

void linear_forward(std::span<const double> in, std::size_t rows, std::size_t in_dim,
                    std::span<const double> weight, std::span<const double> bias,
                    std::size_t out_dim, std::span<double> out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = in.data() + r * in_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
            const double* w = weight.data() + o * in_dim;
            double acc = bias[o];
            for (std::size_t i = 0; i < in_dim; ++i) acc += x[i] * w[i];
            out[r * out_dim + o] = acc;
        }
    }
}

void linear_backward_params(std::span<const double> dout, std::span<const double> in,
                            std::size_t rows, std::size_t in_dim, std::size_t out_dim,
                            std::span<double> dweight, std::span<double> dbias) {
    for (std::size_t o = 0; o < out_dim; ++o) {
        double* dw = dweight.data() + o * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) dw[i] = 0.0;
        double db = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double g = dout[r * out_dim + o];
            const double* x = in.data() + r * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i) dw[i] += g * x[i];
            db += g;
        }
        dbias[o] = db;
    }
}

void linear_backward_input(std::span<const double> dout, std::span<const double> weight,
                           std::size_t rows, std::size_t in_dim, std::size_t out_dim,
                           std::span<double> din) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* dx = din.data() + r * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) dx[i] = 0.0;
        for (std::size_t o = 0; o < out_dim; ++o) {
            const double g = dout[r * out_dim + o];
            const double* w = weight.data() + o * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i) dx[i] += g * w[i];
        }
    }
}

void column_moments(std::span<const double> x, std::size_t rows, std::size_t cols,
                    std::span<double> mean, std::span<double> var) {
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t c = 0; c < cols; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < rows; ++r) s += x[r * cols + c];
        const double mu = s * inv;
        double q = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = x[r * cols + c] - mu;
            q += d * d;
        }
        mean[c] = mu;
        var[c] = q * inv;
    }
}

}  // namespace afl::kernels::reference

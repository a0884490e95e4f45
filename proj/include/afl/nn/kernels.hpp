#pragma once

#include <cstddef>
#include <span>

// Dense-layer kernels. The default namespace holds the OpenMP versions; the
// `reference` namespace keeps straight serial loops with the same summation
// order, so both paths agree bit for bit.
namespace afl::kernels {

// out[r, o] = bias[o] + sum_i in[r, i] * weight[o, i]
void linear_forward(std::span<const double> in, std::size_t rows, std::size_t in_dim,
                    std::span<const double> weight, std::span<const double> bias,
                    std::size_t out_dim, std::span<double> out);

// dweight[o, i] = sum_r dout[r, o] * in[r, i];  dbias[o] = sum_r dout[r, o]
void linear_backward_params(std::span<const double> dout, std::span<const double> in,
                            std::size_t rows, std::size_t in_dim, std::size_t out_dim,
                            std::span<double> dweight, std::span<double> dbias);

// din[r, i] = sum_o dout[r, o] * weight[o, i]
void linear_backward_input(std::span<const double> dout, std::span<const double> weight,
                           std::size_t rows, std::size_t in_dim, std::size_t out_dim,
                           std::span<double> din);

// Per-column mean and biased variance of a [rows, cols] matrix.
void column_moments(std::span<const double> x, std::size_t rows, std::size_t cols,
                    std::span<double> mean, std::span<double> var);

// Work (multiply-adds) below which the OpenMP kernels stay serial.
inline constexpr std::size_t kParallelThreshold = 1u << 16;

namespace reference {

void linear_forward(std::span<const double> in, std::size_t rows, std::size_t in_dim,
                    std::span<const double> weight, std::span<const double> bias,
                    std::size_t out_dim, std::span<double> out);
void linear_backward_params(std::span<const double> dout, std::span<const double> in,
                            std::size_t rows, std::size_t in_dim, std::size_t out_dim,
                            std::span<double> dweight, std::span<double> dbias);
void linear_backward_input(std::span<const double> dout, std::span<const double> weight,
                           std::size_t rows, std::size_t in_dim, std::size_t out_dim,
                           std::span<double> din);
void column_moments(std::span<const double> x, std::size_t rows, std::size_t cols,
                    std::span<double> mean, std::span<double> var);

}  // namespace reference
}  // namespace afl::kernels

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace afl::nn {

// Row-major dense buffer of doubles. Almost everything in this project is a
// 2-D [rows, cols] matrix; higher ranks are only carried through.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    std::size_t rows() const;
    std::size_t cols() const;
    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

    std::span<double> row(std::size_t r);
    std::span<const double> row(std::size_t r) const;

    bool all_finite() const;
};

// Stack selected rows of `src` into a new [indices.size(), cols] tensor.
Tensor gather_rows(const Tensor& src, std::span<const std::size_t> indices);

}  // namespace afl::nn

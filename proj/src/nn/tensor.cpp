#include "afl/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "afl/errors.hpp"

namespace afl::nn {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : shape{rows, cols}, values(rows * cols, fill) {}

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<double> values_in)
    : shape(std::move(shape_in)), values(std::move(values_in)) {
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                          std::multiplies<>());
    if (shape.empty() || n != values.size()) {
        throw DimensionError("tensor shape product " + std::to_string(n) +
                             " does not match value count " + std::to_string(values.size()));
    }
}

std::size_t Tensor::rows() const { return shape.empty() ? 0 : shape.front(); }

std::size_t Tensor::cols() const {
    if (shape.size() < 2) return shape.empty() ? 0 : 1;
    return std::accumulate(shape.begin() + 1, shape.end(), std::size_t{1}, std::multiplies<>());
}

std::span<double> Tensor::row(std::size_t r) {
    const std::size_t c = cols();
    return {values.data() + r * c, c};
}

std::span<const double> Tensor::row(std::size_t r) const {
    const std::size_t c = cols();
    return {values.data() + r * c, c};
}

bool Tensor::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor gather_rows(const Tensor& src, std::span<const std::size_t> indices) {
    const std::size_t c = src.cols();
    Tensor out(indices.size(), c);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= src.rows()) throw DimensionError("gather_rows: index out of range");
        auto from = src.row(indices[k]);
        std::copy(from.begin(), from.end(), out.row(k).begin());
    }
    return out;
}

}  // namespace afl::nn

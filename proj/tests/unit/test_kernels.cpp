#include <doctest.h>

#include <cstring>
#include <vector>

#include <omp.h>

#include "afl/nn/kernels.hpp"
#include "support.hpp"

using namespace afl;

namespace {

bool bitwise(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> randv(std::size_t n, Rng& rng) { return test::random_tensor(1, n, rng).values; }

}  // namespace

TEST_CASE("OpenMP kernels agree bitwise with the serial reference") {
    omp_set_num_threads(4);
    Rng rng = make_rng(20);
    // Sizes on both sides of the parallel threshold.
    for (auto [rows, in, out] : {std::tuple<std::size_t, std::size_t, std::size_t>{3, 5, 4}, {256, 64, 40},
                                 {513, 97, 33}}) {
        const auto x = randv(rows * in, rng);
        const auto w = randv(out * in, rng);
        const auto b = randv(out, rng);
        const auto dout = randv(rows * out, rng);

        std::vector<double> y1(rows * out), y2(rows * out);
        kernels::linear_forward(x, rows, in, w, b, out, y1);
        kernels::reference::linear_forward(x, rows, in, w, b, out, y2);
        CHECK(bitwise(y1, y2));

        std::vector<double> dw1(out * in), dw2(out * in), db1(out), db2(out);
        kernels::linear_backward_params(dout, x, rows, in, out, dw1, db1);
        kernels::reference::linear_backward_params(dout, x, rows, in, out, dw2, db2);
        CHECK(bitwise(dw1, dw2));
        CHECK(bitwise(db1, db2));

        std::vector<double> dx1(rows * in), dx2(rows * in);
        kernels::linear_backward_input(dout, w, rows, in, out, dx1);
        kernels::reference::linear_backward_input(dout, w, rows, in, out, dx2);
        CHECK(bitwise(dx1, dx2));

        std::vector<double> m1(in), m2(in), v1(in), v2(in);
        kernels::column_moments(x, rows, in, m1, v1);
        kernels::reference::column_moments(x, rows, in, m2, v2);
        CHECK(bitwise(m1, m2));
        CHECK(bitwise(v1, v2));
    }
}

TEST_CASE("linear_forward matches a naive triple loop") {
    Rng rng = make_rng(21);
    const std::size_t rows = 4, in = 3, out = 2;
    const auto x = randv(rows * in, rng);
    const auto w = randv(out * in, rng);
    const auto b = randv(out, rng);
    std::vector<double> y(rows * out);
    kernels::linear_forward(x, rows, in, w, b, out, y);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t o = 0; o < out; ++o) {
            double acc = b[o];
            for (std::size_t i = 0; i < in; ++i) acc += x[r * in + i] * w[o * in + i];
            CHECK(y[r * out + o] == doctest::Approx(acc).epsilon(1e-14));
        }
}

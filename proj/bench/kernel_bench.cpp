// Serial reference kernels against the OpenMP versions on dense-layer shapes.
// Args are {rows, in_dim, out_dim}.

#include <cstddef>
#include <vector>

#include <benchmark/benchmark.h>
#include <boost/random/normal_distribution.hpp>

#include "afl/nn/kernels.hpp"
#include "afl/rng.hpp"

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    afl::Rng rng = afl::make_rng(seed);
    boost::random::normal_distribution<double> normal;
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    return v;
}

struct Shape {
    std::size_t rows, in, out;
    explicit Shape(const benchmark::State& s)
        : rows(static_cast<std::size_t>(s.range(0))),
          in(static_cast<std::size_t>(s.range(1))),
          out(static_cast<std::size_t>(s.range(2))) {}
};

template <bool Parallel>
void forward(benchmark::State& state) {
    const Shape d(state);
    auto in = random_vector(d.rows * d.in, 1);
    auto w = random_vector(d.out * d.in, 2);
    auto b = random_vector(d.out, 3);
    std::vector<double> out(d.rows * d.out);
    for (auto _ : state) {
        if constexpr (Parallel)
            afl::kernels::linear_forward(in, d.rows, d.in, w, b, d.out, out);
        else
            afl::kernels::reference::linear_forward(in, d.rows, d.in, w, b, d.out, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.rows * d.in * d.out));
}

template <bool Parallel>
void backward_params(benchmark::State& state) {
    const Shape d(state);
    auto dout = random_vector(d.rows * d.out, 4);
    auto in = random_vector(d.rows * d.in, 5);
    std::vector<double> dw(d.out * d.in), db(d.out);
    for (auto _ : state) {
        if constexpr (Parallel)
            afl::kernels::linear_backward_params(dout, in, d.rows, d.in, d.out, dw, db);
        else
            afl::kernels::reference::linear_backward_params(dout, in, d.rows, d.in, d.out, dw, db);
        benchmark::DoNotOptimize(dw.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.rows * d.in * d.out));
}

template <bool Parallel>
void backward_input(benchmark::State& state) {
    const Shape d(state);
    auto dout = random_vector(d.rows * d.out, 6);
    auto w = random_vector(d.out * d.in, 7);
    std::vector<double> din(d.rows * d.in);
    for (auto _ : state) {
        if constexpr (Parallel)
            afl::kernels::linear_backward_input(dout, w, d.rows, d.in, d.out, din);
        else
            afl::kernels::reference::linear_backward_input(dout, w, d.rows, d.in, d.out, din);
        benchmark::DoNotOptimize(din.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.rows * d.in * d.out));
}

template <bool Parallel>
void moments(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    const auto cols = static_cast<std::size_t>(state.range(1));
    auto x = random_vector(rows * cols, 8);
    std::vector<double> mean(cols), var(cols);
    for (auto _ : state) {
        if constexpr (Parallel)
            afl::kernels::column_moments(x, rows, cols, mean, var);
        else
            afl::kernels::reference::column_moments(x, rows, cols, mean, var);
        benchmark::DoNotOptimize(var.data());
    }
}

void layer_shapes(benchmark::internal::Benchmark* b) {
    b->Args({32, 32, 64})->Args({256, 64, 64})->Args({1024, 256, 256})->Args({4096, 512, 256});
}

void moment_shapes(benchmark::internal::Benchmark* b) {
    b->Args({256, 64})->Args({4096, 512});
}

}  // namespace

BENCHMARK(forward<false>)->Name("linear_forward/serial")->Apply(layer_shapes);
BENCHMARK(forward<true>)->Name("linear_forward/omp")->Apply(layer_shapes)->UseRealTime();
BENCHMARK(backward_params<false>)->Name("linear_backward_params/serial")->Apply(layer_shapes);
BENCHMARK(backward_params<true>)->Name("linear_backward_params/omp")->Apply(layer_shapes)->UseRealTime();
BENCHMARK(backward_input<false>)->Name("linear_backward_input/serial")->Apply(layer_shapes);
BENCHMARK(backward_input<true>)->Name("linear_backward_input/omp")->Apply(layer_shapes)->UseRealTime();
BENCHMARK(moments<false>)->Name("column_moments/serial")->Apply(moment_shapes);
BENCHMARK(moments<true>)->Name("column_moments/omp")->Apply(moment_shapes)->UseRealTime();

BENCHMARK_MAIN();

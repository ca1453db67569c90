// OpenMP kernels against the serial reference loops, at the training shapes
// (batch 128, width 256) and one larger shape.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ranslice/dqn/kernels.hpp"

namespace k = ranslice::dqn::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

template <auto Fn>
void bm_forward(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0)), w = static_cast<std::size_t>(st.range(1));
    const auto X = random_vec(n * w, 1), W = random_vec(w * w, 2), b = random_vec(w, 3);
    std::vector<double> Y(n * w);
    for (auto _ : st) {
        Fn(X.data(), n, w, W.data(), b.data(), w, Y.data(), true);
        benchmark::DoNotOptimize(Y.data());
    }
    st.SetItemsProcessed(static_cast<long>(st.iterations() * n * w * w));
}

template <auto Fn>
void bm_backward(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0)), w = static_cast<std::size_t>(st.range(1));
    const auto X = random_vec(n * w, 1), dY = random_vec(n * w, 2), W = random_vec(w * w, 3);
    std::vector<double> dW(w * w), db(w), dX(n * w);
    for (auto _ : st) {
        Fn(X.data(), dY.data(), n, w, w, W.data(), dW.data(), db.data(), dX.data());
        benchmark::DoNotOptimize(dX.data());
    }
    st.SetItemsProcessed(static_cast<long>(st.iterations() * 2 * n * w * w));
}

template <auto Fn>
void bm_adam(benchmark::State& st) {
    const auto count = static_cast<std::size_t>(st.range(0));
    auto p = random_vec(count, 1);
    const auto g = random_vec(count, 2);
    std::vector<double> m(count), v(count);
    long t = 0;
    for (auto _ : st) {
        Fn(p.data(), g.data(), m.data(), v.data(), count, 1e-3, 0.9, 0.999, 1e-8, ++t);
        benchmark::DoNotOptimize(p.data());
    }
    st.SetItemsProcessed(static_cast<long>(st.iterations() * count));
}

}  // namespace

BENCHMARK(bm_forward<k::dense_forward>)->Name("dense_forward/omp")->Args({128, 256})->Args({1024, 512});
BENCHMARK(bm_forward<k::reference::dense_forward>)->Name("dense_forward/ref")->Args({128, 256})->Args({1024, 512});
BENCHMARK(bm_backward<k::dense_backward>)->Name("dense_backward/omp")->Args({128, 256})->Args({1024, 512});
BENCHMARK(bm_backward<k::reference::dense_backward>)->Name("dense_backward/ref")->Args({128, 256})->Args({1024, 512});
// 1 -> 256x4 -> 17 has 202,257 parameters.
BENCHMARK(bm_adam<k::adam_update>)->Name("adam_update/omp")->Arg(202257);
BENCHMARK(bm_adam<k::reference::adam_update>)->Name("adam_update/ref")->Arg(202257);

BENCHMARK_MAIN();

// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>

#include "trgan/kernels.hpp"

namespace {

using namespace trgan;

std::vector<float> random_vec(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <bool Ref>
void BM_Gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto a = random_vec(m * k, 1);
  const auto b = random_vec(k * n, 2);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    if constexpr (Ref)
      kernels::gemm_ref(m, n, k, a.data(), k, b.data(), n, c.data(), n);
    else
      kernels::gemm(m, n, k, a.data(), k, b.data(), n, c.data(), n);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * m * n * k, benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

template <bool Ref>
void BM_Conv3x3(benchmark::State& state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const auto side = static_cast<std::size_t>(state.range(1));
  kernels::ConvGeometry g{ch, ch, 3, 1, 1};
  Tensor<float> x(4, ch, side, side), w(ch, ch, 3, 3), b(ch, 1, 1, 1);
  const auto xv = random_vec(x.size(), 3);
  const auto wv = random_vec(w.size(), 4);
  std::copy(xv.begin(), xv.end(), x.data());
  std::copy(wv.begin(), wv.end(), w.data());
  Tensor<float> y(4, ch, side, side);
  for (auto _ : state) {
    if constexpr (Ref)
      kernels::conv2d_forward_ref(x, w, b.data(), g, y);
    else
      kernels::conv2d_forward(x, w, b.data(), g, y);
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Args({16, 4096, 144})->Args({64, 256, 576})->Args({144, 4096, 16});
BENCHMARK(BM_Gemm<true>)->Args({16, 4096, 144})->Args({64, 256, 576})->Args({144, 4096, 16});
BENCHMARK(BM_Conv3x3<false>)->Args({16, 64})->Args({32, 32});
BENCHMARK(BM_Conv3x3<true>)->Args({16, 64})->Args({32, 32});

BENCHMARK_MAIN();

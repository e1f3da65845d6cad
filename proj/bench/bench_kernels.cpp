// Optimised kernels vs the serial reference loops on autoencoder-sized layers.

#include <benchmark/benchmark.h>

#include <vector>

#include "thermocae/kernels.hpp"
#include "thermocae/rng.hpp"

using namespace thermocae;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Args: batch, channels_in, side, channels_out.
ConvGeometry geometry(const benchmark::State& st) {
  ConvGeometry g;
  g.batch = static_cast<std::size_t>(st.range(0));
  g.channels_in = static_cast<std::size_t>(st.range(1));
  g.in_h = g.in_w = static_cast<std::size_t>(st.range(2));
  g.channels_out = static_cast<std::size_t>(st.range(3));
  return g;
}

template <bool Reference>
void BM_ConvForward(benchmark::State& st) {
  const ConvGeometry g = geometry(st);
  const auto x = random_vec(g.in_size(), 1), w = random_vec(g.weight_size(), 2), b = random_vec(g.channels_out, 3);
  std::vector<double> y(g.out_size());
  for (auto _ : st) {
    if constexpr (Reference) kernels::reference::conv2d_forward(g, x, w, b, y);
    else kernels::conv2d_forward(g, x, w, b, y);
    benchmark::DoNotOptimize(y.data());
  }
  st.counters["MAC/s"] = benchmark::Counter(static_cast<double>(g.out_size() * g.patch()) * st.iterations(),
                                            benchmark::Counter::kIsRate);
}

template <bool Reference>
void BM_ConvBackward(benchmark::State& st) {
  const ConvGeometry g = geometry(st);
  const auto x = random_vec(g.in_size(), 1), w = random_vec(g.weight_size(), 2), dy = random_vec(g.out_size(), 3);
  std::vector<double> dx(g.in_size()), dw(g.weight_size()), db(g.channels_out);
  for (auto _ : st) {
    if constexpr (Reference) {
      kernels::reference::conv2d_backward_input(g, dy, w, dx);
      kernels::reference::conv2d_backward_weight(g, x, dy, dw, db);
    } else {
      kernels::conv2d_backward_input(g, dy, w, dx);
      kernels::conv2d_backward_weight(g, x, dy, dw, db);
    }
    benchmark::DoNotOptimize(dx.data());
    benchmark::DoNotOptimize(dw.data());
  }
  st.counters["MAC/s"] = benchmark::Counter(2.0 * static_cast<double>(g.out_size() * g.patch()) * st.iterations(),
                                            benchmark::Counter::kIsRate);
}

template <bool Reference>
void BM_Dense(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)), f = static_cast<std::size_t>(st.range(1)),
             g = static_cast<std::size_t>(st.range(2));
  const auto x = random_vec(n * f, 1), w = random_vec(f * g, 2), b = random_vec(g, 3), dy = random_vec(n * g, 4);
  std::vector<double> y(n * g), dx(n * f), dw(f * g), db(g);
  for (auto _ : st) {
    if constexpr (Reference) {
      kernels::reference::dense_forward(n, f, g, x, w, b, y);
      kernels::reference::dense_backward(n, f, g, x, w, dy, dx, dw, db);
    } else {
      kernels::dense_forward(n, f, g, x, w, b, y);
      kernels::dense_backward(n, f, g, x, w, dy, dx, dw, db);
    }
    benchmark::DoNotOptimize(y.data());
    benchmark::DoNotOptimize(dw.data());
  }
}

void conv_shapes(benchmark::internal::Benchmark* b) {
  b->Args({8, 1, 128, 32})->Args({8, 32, 64, 64})->Args({8, 64, 32, 128})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Apply(conv_shapes);
BENCHMARK(BM_ConvForward<true>)->Apply(conv_shapes);
BENCHMARK(BM_ConvBackward<false>)->Apply(conv_shapes);
BENCHMARK(BM_ConvBackward<true>)->Apply(conv_shapes);
BENCHMARK(BM_Dense<false>)->Args({32, 8192, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dense<true>)->Args({32, 8192, 32})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

// Copyright 2026 The legacyfont Authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels against the OpenMP kernels on training shapes.
//   build/bench/bench_kernels --benchmark_counters_tabular=true

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lfg/kernels.hpp"

using namespace lfg::kernels;

namespace {

std::vector<float> noise(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// batch 16, 32x32 glyphs through the first two encoder widths
Conv2dGeom geom(std::int64_t which) {
  Conv2dGeom g;
  g.batch = 16;
  g.pad = 1;
  if (which == 0) {
    g.in_ch = 1;
    g.in_h = g.in_w = 32;
    g.out_ch = 32;
  } else {
    g.in_ch = 32;
    g.in_h = g.in_w = 32;
    g.out_ch = 64;
    g.stride = 2;
  }
  return g;
}

template <bool kReference>
void BM_Matmul(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  const auto a = noise(n * n, 1), b = noise(n * n, 2);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    if constexpr (kReference) reference::matmul(a.data(), b.data(), c.data(), n, n, n);
    else matmul(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] =
      benchmark::Counter(2.0 * n * n * n * state.iterations() * 1e-9, benchmark::Counter::kIsRate);
}

template <bool kReference>
void BM_ConvForward(benchmark::State& state) {
  const auto g = geom(state.range(0));
  const auto x = noise(g.batch * g.in_ch * g.in_h * g.in_w, 3);
  const auto w = noise(g.out_ch * g.patch(), 4);
  std::vector<float> y(g.batch * g.out_ch * g.out_h() * g.out_w());
  for (auto _ : state) {
    if constexpr (kReference) reference::conv2d_forward(g, x.data(), w.data(), y.data());
    else conv2d_forward(g, x.data(), w.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool kReference>
void BM_ConvBackward(benchmark::State& state) {
  const auto g = geom(state.range(0));
  const auto x = noise(g.batch * g.in_ch * g.in_h * g.in_w, 5);
  const auto w = noise(g.out_ch * g.patch(), 6);
  const auto dy = noise(g.batch * g.out_ch * g.out_h() * g.out_w(), 7);
  std::vector<float> dx(x.size()), dw(w.size());
  for (auto _ : state) {
    if constexpr (kReference) {
      reference::conv2d_backward_input(g, dy.data(), w.data(), dx.data());
      reference::conv2d_backward_weight(g, x.data(), dy.data(), dw.data());
    } else {
      conv2d_backward_input(g, dy.data(), w.data(), dx.data());
      conv2d_backward_weight(g, x.data(), dy.data(), dw.data());
    }
    benchmark::DoNotOptimize(dx.data());
    benchmark::DoNotOptimize(dw.data());
  }
}

}  // namespace

BENCHMARK(BM_Matmul<true>)->Name("matmul/reference")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<false>)->Name("matmul/openmp")->Arg(64)->Arg(256);
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/reference")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/openmp")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/reference")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/openmp")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

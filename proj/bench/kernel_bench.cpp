// Side-by-side timings of the OpenMP kernels and their serial reference.
// Shapes mirror the first conv block of the desk-scale network on a batch of
// 64x64 images. Run with OMP_NUM_THREADS set to taste; the two variants
// produce bit-identical outputs regardless (see tests/test_kernels.cpp).

#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "migdir/kernels.hpp"
#include "migdir/rng.hpp"

namespace {

using namespace migdir;

std::vector<double> randn(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(count);
  for (double& x : v) x = rng.normal(0.0, 1.0);
  return v;
}

constexpr int kN = 8, kH = 64, kW = 64, kCin = 1, kKh = 5, kKw = 5, kCout = 8;
constexpr int kOh = kH - kKh + 1, kOw = kW - kKw + 1;
constexpr int kDenseIn = 3136, kDenseOut = 128;

struct Data {
  std::vector<double> in = randn(static_cast<std::size_t>(kN) * kH * kW * kCin, 1);
  std::vector<double> w = randn(static_cast<std::size_t>(kKh) * kKw * kCin * kCout, 2);
  std::vector<double> b = randn(kCout, 3);
  std::vector<double> out =
      std::vector<double>(static_cast<std::size_t>(kN) * kOh * kOw * kCout);
  std::vector<double> dout = randn(out.size(), 4);
  std::vector<double> din = std::vector<double>(in.size());
  std::vector<double> dw = std::vector<double>(w.size());
  std::vector<double> db = std::vector<double>(b.size());
  std::vector<std::uint8_t> argmax =
      std::vector<std::uint8_t>(static_cast<std::size_t>(kN) * (kOh / 2) * (kOw / 2) * kCout);
  std::vector<double> pooled =
      std::vector<double>(static_cast<std::size_t>(kN) * (kOh / 2) * (kOw / 2) * kCout);
  std::vector<double> dense_in = randn(static_cast<std::size_t>(kN) * kDenseIn, 5);
  std::vector<double> dense_w = randn(static_cast<std::size_t>(kDenseIn) * kDenseOut, 6);
  std::vector<double> dense_b = randn(kDenseOut, 7);
  std::vector<double> dense_out = std::vector<double>(static_cast<std::size_t>(kN) * kDenseOut);
};

Data& data() {
  static Data d;
  return d;
}

template <auto Fn>
void BM_conv_forward(benchmark::State& state) {
  Data& d = data();
  for (auto _ : state) {
    Fn(d.in.data(), d.w.data(), d.b.data(), d.out.data(), kN, kH, kW, kCin,
       kKh, kKw, kCout);
    benchmark::DoNotOptimize(d.out.data());
  }
}

template <auto Fn>
void BM_conv_backward_input(benchmark::State& state) {
  Data& d = data();
  for (auto _ : state) {
    Fn(d.dout.data(), d.w.data(), d.din.data(), kN, kH, kW, kCin, kKh, kKw,
       kCout);
    benchmark::DoNotOptimize(d.din.data());
  }
}

template <auto Fn>
void BM_conv_backward_params(benchmark::State& state) {
  Data& d = data();
  for (auto _ : state) {
    std::fill(d.dw.begin(), d.dw.end(), 0.0);
    std::fill(d.db.begin(), d.db.end(), 0.0);
    Fn(d.in.data(), d.dout.data(), d.dw.data(), d.db.data(), kN, kH, kW, kCin,
       kKh, kKw, kCout);
    benchmark::DoNotOptimize(d.dw.data());
  }
}

template <auto Fn>
void BM_maxpool_forward(benchmark::State& state) {
  Data& d = data();
  for (auto _ : state) {
    Fn(d.out.data(), d.pooled.data(), d.argmax.data(), kN, kOh, kOw, kCout);
    benchmark::DoNotOptimize(d.pooled.data());
  }
}

template <auto Fn>
void BM_dense_forward(benchmark::State& state) {
  Data& d = data();
  for (auto _ : state) {
    Fn(d.dense_in.data(), d.dense_w.data(), d.dense_b.data(),
       d.dense_out.data(), kN, kDenseIn, kDenseOut);
    benchmark::DoNotOptimize(d.dense_out.data());
  }
}

template <auto Fn>
void BM_relu_forward(benchmark::State& state) {
  Data& d = data();
  for (auto _ : state) {
    Fn(d.in.data(), d.din.data(), static_cast<std::int64_t>(d.in.size()));
    benchmark::DoNotOptimize(d.din.data());
  }
}

BENCHMARK(BM_conv_forward<kernels::serial::conv2d_forward>)->Name("conv2d_forward/serial");
BENCHMARK(BM_conv_forward<kernels::par::conv2d_forward>)->Name("conv2d_forward/par");
BENCHMARK(BM_conv_backward_input<kernels::serial::conv2d_backward_input>)->Name("conv2d_backward_input/serial");
BENCHMARK(BM_conv_backward_input<kernels::par::conv2d_backward_input>)->Name("conv2d_backward_input/par");
BENCHMARK(BM_conv_backward_params<kernels::serial::conv2d_backward_params>)->Name("conv2d_backward_params/serial");
BENCHMARK(BM_conv_backward_params<kernels::par::conv2d_backward_params>)->Name("conv2d_backward_params/par");
BENCHMARK(BM_maxpool_forward<kernels::serial::maxpool2_forward>)->Name("maxpool2_forward/serial");
BENCHMARK(BM_maxpool_forward<kernels::par::maxpool2_forward>)->Name("maxpool2_forward/par");
BENCHMARK(BM_dense_forward<kernels::serial::dense_forward>)->Name("dense_forward/serial");
BENCHMARK(BM_dense_forward<kernels::par::dense_forward>)->Name("dense_forward/par");
BENCHMARK(BM_relu_forward<kernels::serial::relu_forward>)->Name("relu_forward/serial");
BENCHMARK(BM_relu_forward<kernels::par::relu_forward>)->Name("relu_forward/par");

}  // namespace

BENCHMARK_MAIN();

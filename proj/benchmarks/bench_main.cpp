// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "mdf/image_io.hpp"
#include "mdf/losses.hpp"
#include "mdf/resize.hpp"
#include "mdf/singan.hpp"
#include "mdf/synth.hpp"

using namespace mdf;

namespace {

Image bench_image(int size, uint64_t seed = 1) {
  return synth_image(seed, {.h = size, .w = size});
}

DiscriminatorStack bench_stack(int scales, int width) {
  TrainHyper hyper;
  hyper.seed = 1;
  hyper.base_width = width;
  DiscriminatorStack stack;
  for (int k = 1; k <= scales; ++k)
    stack.scales.push_back(make_scale_models(k, 3, hyper).discriminator);
  stack.meta.scales = scales;
  stack.meta.channels = 3;
  return stack;
}

}  // namespace

static void BM_Conv2dForward(benchmark::State& state) {
  int size = static_cast<int>(state.range(0));
  Rng rng(2);
  Tensor<float> x(1, 32, size, size);
  for (auto& v : x.v) v = static_cast<float>(rng.uniform() - 0.5);
  Conv2d<float> conv(32, 32, 3, 1);
  conv.init_he(rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
  state.SetItemsProcessed(state.iterations() * int64_t(size) * size * 32 * 32 * 9);
}
BENCHMARK(BM_Conv2dForward)->Arg(32)->Arg(64)->Arg(96);

static void BM_MdfLoss(benchmark::State& state) {
  int size = static_cast<int>(state.range(0));
  DiscriminatorStack stack = bench_stack(3, 32);
  Image x = bench_image(size, 3);
  Image y = bench_image(size, 4);
  for (auto _ : state) benchmark::DoNotOptimize(mdf_loss(stack, x, y));
}
BENCHMARK(BM_MdfLoss)->Arg(32)->Arg(64);

static void BM_MdfLossGrad(benchmark::State& state) {
  int size = static_cast<int>(state.range(0));
  DiscriminatorStack stack = bench_stack(3, 32);
  Image x = bench_image(size, 3);
  Image y = bench_image(size, 4);
  Image grad;
  for (auto _ : state) benchmark::DoNotOptimize(mdf_loss_grad(stack, x, y, grad));
}
BENCHMARK(BM_MdfLossGrad)->Arg(32)->Arg(64);

static void BM_Ssim(benchmark::State& state) {
  int size = static_cast<int>(state.range(0));
  Image x = bench_image(size, 5);
  Image y = bench_image(size, 6);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(x, y));
}
BENCHMARK(BM_Ssim)->Arg(96)->Arg(256);

static void BM_MsSsimLoss(benchmark::State& state) {
  Image x = bench_image(256, 7);
  Image y = bench_image(256, 8);
  for (auto _ : state) benchmark::DoNotOptimize(ms_ssim_loss(x, y));
}
BENCHMARK(BM_MsSsimLoss);

static void BM_JpegRoundtrip(benchmark::State& state) {
  Image x = bench_image(static_cast<int>(state.range(0)), 9);
  for (auto _ : state) benchmark::DoNotOptimize(jpeg_roundtrip(x, 10));
}
BENCHMARK(BM_JpegRoundtrip)->Arg(64)->Arg(256);

static void BM_LanczosResize(benchmark::State& state) {
  Image x = bench_image(256, 10);
  for (auto _ : state) benchmark::DoNotOptimize(resize(x, 64, 64, Filter::kLanczos));
}
BENCHMARK(BM_LanczosResize);

BENCHMARK_MAIN();

// Copyright 2026 The utg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "utg/models/pixelcnn.hpp"
#include "utg/models/vqvae.hpp"
#include "utg/nn/graph.hpp"
#include "utg/nn/linalg.hpp"
#include "utg/nn/ops.hpp"
#include "utg/rare/rare_latent.hpp"
#include "utg/rng.hpp"

namespace {

using namespace utg;

template <class T>
nn::Tensor<T> noise(nn::Shape shape, std::uint64_t seed) {
  nn::Tensor<T> t(shape, T{0});
  Rng rng(seed);
  std::normal_distribution<double> n;
  for (auto& v : t.data()) v = static_cast<T>(n(rng));
  return t;
}

void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = noise<float>({n, n}, 1), b = noise<float>({n, n}, 2);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    nn::linalg::gemm(n, n, n, a.raw(), b.raw(), c.data(), false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 2 * n * n * n));
}
BENCHMARK(BM_Gemm)->Arg(64)->Arg(128)->Arg(256);

// First VQ-VAE encoder layer on a 32-image MNIST batch, forward and backward.
void BM_Conv2dTrainStep(benchmark::State& state) {
  const auto x = noise<float>({32, 1, 28, 28}, 3);
  const auto w = noise<float>({16, 1, 4, 4}, 4);
  const nn::Tensor<float> b({16}, 0.0f);
  for (auto _ : state) {
    nn::Graph<float> g;
    auto y = nn::conv2d(g, g.constant(x), g.variable(w), g.variable(b), nn::ConvSpec{2, 1, {}});
    auto loss = nn::sum(g, nn::square(g, y));
    g.backward(loss);
    benchmark::DoNotOptimize(g.value(loss).item());
  }
}
BENCHMARK(BM_Conv2dTrainStep)->Unit(benchmark::kMillisecond);

void BM_MaskedConv2d(benchmark::State& state) {
  const auto x = noise<float>({32, 64, 7, 7}, 5);
  const auto w = noise<float>({64, 64, 3, 3}, 6);
  const nn::Tensor<float> b({64}, 0.0f);
  const nn::ConvSpec spec{1, 1, nn::causal_mask(3, 3, nn::MaskType::kB)};
  for (auto _ : state) {
    nn::Graph<float> g;
    auto y = nn::conv2d(g, g.constant(x), g.constant(w), g.constant(b), spec);
    benchmark::DoNotOptimize(g.value(y).raw());
  }
}
BENCHMARK(BM_MaskedConv2d)->Unit(benchmark::kMillisecond);

void BM_Metropolis(benchmark::State& state) {
  rare::ChainConfig cfg;
  cfg.seed = 9;
  for (auto _ : state) benchmark::DoNotOptimize(rare::sample_metropolis({5.0, 5.0}, 10000, cfg));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_Metropolis)->Unit(benchmark::kMillisecond);

void BM_ExactOracle(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(rare::sample_exact_oracle({5.0, 5.0}, 10000, 9));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_ExactOracle)->Unit(benchmark::kMillisecond);

// 7x7 map, V = 32, K = 16.
void BM_QuantizeNearest(benchmark::State& state) {
  const auto cb_values = noise<double>({32, 16}, 7);
  std::vector<std::vector<double>> rows(32, std::vector<double>(16));
  for (std::size_t v = 0; v < 32; ++v)
    for (std::size_t k = 0; k < 16; ++k) rows[v][k] = cb_values.data()[v * 16 + k];
  const auto cb = models::Codebook::from_rows(rows);
  const auto z = noise<double>({7 * 7 * 16}, 8);
  const models::LatentMap map{7, 7, 16, std::vector<double>(z.data().begin(), z.data().end())};
  for (auto _ : state) benchmark::DoNotOptimize(models::quantize_nearest(map, cb));
  state.SetItemsProcessed(state.iterations() * 49);
}
BENCHMARK(BM_QuantizeNearest);

// One 7x7 map sampled cell by cell from an untrained default-size prior.
void BM_PriorGenerateMap(benchmark::State& state) {
  models::PriorConfig cfg;
  const models::PriorModel m(cfg);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(models::generate_map(m, seed++, rare::ThresholdParam{0.6}));
}
BENCHMARK(BM_PriorGenerateMap)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

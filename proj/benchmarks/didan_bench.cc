/* Copyright 2026 The DIDAN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <benchmark/benchmark.h>

#include <random>

#include "didan/cca.h"
#include "didan/model.h"
#include "didan/synth.h"

namespace didan {
namespace {

SynthSplits bench_records(std::size_t d_text, std::size_t d_image, std::size_t n = 40) {
  SynthConfig c;
  c.n_articles = n;
  c.d_text = d_text;
  c.d_image = d_image;
  c.latent_dim = 8;
  c.split_fractions = {1.0, 0.0, 0.0};
  return generate_records(c);
}

ModelDims bench_dims(std::size_t d_text, std::size_t d_image, std::size_t d_vse) {
  ModelDims d;
  d.d_text = d_text;
  d.d_image = d_image;
  d.d_vse = d_vse;
  return d;
}

// Args: d_text, d_image, d_vse.
void BM_ForwardArticle(benchmark::State& state) {
  const auto d_text = static_cast<std::size_t>(state.range(0));
  const auto d_image = static_cast<std::size_t>(state.range(1));
  const SynthSplits data = bench_records(d_text, d_image, 8);
  std::mt19937_64 rng(0);
  const DidanParams<float> p = init_params<float>(
      bench_dims(d_text, d_image, static_cast<std::size_t>(state.range(2))), rng);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& r = data.train[i++ % data.train.size()];
    benchmark::DoNotOptimize(forward_article(r, p).authenticity);
  }
}
BENCHMARK(BM_ForwardArticle)
    ->Args({16, 16, 16})
    ->Args({768, 2048, 512})
    ->Unit(benchmark::kMicrosecond);

void BM_TrainStep(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const SynthSplits data = bench_records(64, 128, batch);
  std::mt19937_64 rng(0);
  const DidanParams<float> p = init_params<float>(bench_dims(64, 128, 64), rng);
  std::vector<ExampleView> views;
  for (const auto& r : data.train) views.push_back({&r, r.pairs, label_value(r.label)});
  for (auto _ : state) {
    Graph<float> g(&p.weights);
    const BatchForward<float> fwd = forward_batch(g, p, views, Mode::kTrain, FusionOptions{});
    const NodeId loss = batch_loss(g, fwd, views);
    benchmark::DoNotOptimize(g.backward(loss).params.size());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * views.size()));
}
BENCHMARK(BM_TrainStep)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_CosineMatrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<float> normal;
  Tensor<float> a({n, 512}), b({36, 512});
  for (auto& v : a.storage()) v = normal(rng);
  for (auto& v : b.storage()) v = normal(rng);
  for (auto _ : state) {
    Graph<float> g;
    const NodeId x = g.constant(a);
    const NodeId y = g.constant(b);
    benchmark::DoNotOptimize(g.value(g.cosine_matrix(x, y)).data().data());
  }
}
BENCHMARK(BM_CosineMatrix)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_FitCca(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(2000, d), b(2000, 2 * d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
  b.leftCols(d) += 0.5 * a;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_cca(a, b, kCcaDefaultComponents, kCcaDefaultRidge).rho(0));
  }
}
BENCHMARK(BM_FitCca)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace didan

BENCHMARK_MAIN();

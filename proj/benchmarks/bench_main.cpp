// Copyright 2026 The tumorroi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
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

#include "tumorroi/clustering.hpp"
#include "tumorroi/components.hpp"
#include "tumorroi/phantom.hpp"
#include "tumorroi/pipeline.hpp"

namespace tumorroi {
namespace {

// Brain-like intensities: a dominant tissue mode and a small bright mode.
std::vector<double> mixture(std::size_t n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> tissue(0.5, 0.03), tumor(0.9, 0.03);
  std::bernoulli_distribution bright(0.05);
  std::vector<double> x(n);
  for (auto& v : x) v = bright(rng) ? tumor(rng) : tissue(rng);
  return x;
}

void BM_EmGmm(benchmark::State& state) {
  const auto x = mixture(static_cast<std::size_t>(state.range(0)));
  const ClusterConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(em_gmm_1d(x, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmGmm)->Arg(4096)->Arg(45000);

void BM_KMeans(benchmark::State& state) {
  const auto x = mixture(static_cast<std::size_t>(state.range(0)));
  const ClusterConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_1d(x, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeans)->Arg(4096)->Arg(45000);

void BM_ConnectedComponents(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution on(0.4);
  std::vector<std::uint8_t> bits(240 * 240);
  for (auto& b : bits) b = on(rng);
  const Mask m(240, 240, bits);
  for (auto _ : state) benchmark::DoNotOptimize(connected_components(m, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ConnectedComponents)->Arg(4)->Arg(8);

// Full pipeline on one 240x240x155 phantom with six slices.
void BM_Pipeline(benchmark::State& state) {
  PhantomSpec spec;
  spec.tumor.center = {150, 100, 79};
  spec.tumor.radius = 32;
  const Phantom p = generate_phantom(spec);
  const std::vector<Volume> train{p.ground_truth};
  const AtlasSet atlases = build_atlases(train, kRepresentativeSlices);
  PipelineConfig cfg;
  cfg.method = state.range(0) == 0 ? ClusterMethod::EM : ClusterMethod::KMeans;
  for (auto _ : state) benchmark::DoNotOptimize(analyze_volume(p.intensity, atlases, cfg));
}
BENCHMARK(BM_Pipeline)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace tumorroi

BENCHMARK_MAIN();

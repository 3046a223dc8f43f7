// Copyright 2026 The clrprune Authors.
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

#include <benchmark/benchmark.h>

#include <string>

#include "clrprune/arch.hpp"
#include "clrprune/counting.hpp"
#include "clrprune/prune.hpp"
#include "clrprune/ranking.hpp"
#include "clrprune/rng.hpp"
#include "clrprune/selection.hpp"
#include "clrprune/weights.hpp"

namespace {

using namespace clrprune;

ArchSpec bundled(const std::string& name) {
  return load_arch(std::string(CLRPRUNE_BENCH_DATA_DIR) + "/archs/" + name + ".json");
}

FilterMatrix gaussian_filters(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  FilterMatrix f(n, d);
  for (auto& v : f.values) v = 0.05 * rng.normal();
  return f;
}

void BM_CountFlops(benchmark::State& state) {
  const auto arch = bundled("resnet50_imagenet");
  for (auto _ : state) benchmark::DoNotOptimize(total(compute_layer_flops(arch)));
}
BENCHMARK(BM_CountFlops);

void BM_PlanStructure(benchmark::State& state, const char* model) {
  const auto arch = bundled(model);
  const auto store = synthesize_weights(arch, 1);
  for (auto _ : state) benchmark::DoNotOptimize(plan_structure(arch, store, 0.5, 1.0));
  state.SetLabel(model);
}
BENCHMARK_CAPTURE(BM_PlanStructure, resnet56, "resnet56_cifar10")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PlanStructure, vgg16, "vgg16_cifar10")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PlanStructure, resnet50, "resnet50_imagenet")->Unit(benchmark::kMillisecond);

// Filters x flattened size of representative conv layers.
void BM_RnfSelect(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto filters = gaussian_filters(n, d, 7);
  for (auto _ : state) benchmark::DoNotOptimize(rnf_select(filters, n / 2));
}
BENCHMARK(BM_RnfSelect)->Args({16, 144})->Args({64, 576})->Args({256, 2304})->Args({512, 4608})
    ->Unit(benchmark::kMillisecond);

void BM_Selector(benchmark::State& state, Selector selector) {
  const auto filters = gaussian_filters(256, 2304, 9);
  for (auto _ : state) benchmark::DoNotOptimize(select_filters(selector, filters, 128, 3));
}
BENCHMARK_CAPTURE(BM_Selector, l1, Selector::L1)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Selector, random, Selector::Random)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Selector, kmeans, Selector::KMeans)->Unit(benchmark::kMillisecond);

void BM_ApplyPlan(benchmark::State& state) {
  const auto arch = bundled("resnet56_cifar10");
  const auto store = synthesize_weights(arch, 2);
  const auto plan = select_plan(arch, store, plan_structure(arch, store, 0.56, 1.0), Selector::L1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(apply_plan(arch, store, plan));
}
BENCHMARK(BM_ApplyPlan)->Unit(benchmark::kMillisecond);

void BM_EncodeWeights(benchmark::State& state) {
  const auto store = synthesize_weights(bundled("vgg16_cifar10"), 3);
  for (auto _ : state) benchmark::DoNotOptimize(encode_weights(store));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(encode_weights(store).size()));
}
BENCHMARK(BM_EncodeWeights)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

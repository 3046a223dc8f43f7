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

#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <filesystem>
#include <string>
#include <vector>

#include "clrprune/arch.hpp"
#include "clrprune/rng.hpp"
#include "clrprune/weights.hpp"

namespace clrprune::testing {

inline std::string data_path(const std::string& relative) {
  return std::string(CLRPRUNE_TEST_DATA_DIR) + "/" + relative;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("clrprune_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline LayerSpec conv(int id, std::string name, std::int64_t in, std::int64_t out, std::int64_t k = 3,
                      std::int64_t stride = 1, std::int64_t pad = 1, bool bias = false) {
  LayerSpec l;
  l.id = id;
  l.name = std::move(name);
  l.kind = LayerKind::Conv;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel_h = l.kernel_w = k;
  l.stride = stride;
  l.padding = pad;
  l.bias = bias;
  return l;
}

inline LayerSpec simple(int id, std::string name, LayerKind kind) {
  LayerSpec l;
  l.id = id;
  l.name = std::move(name);
  l.kind = kind;
  return l;
}

inline LayerSpec pool(int id, std::string name, std::int64_t k, std::int64_t stride) {
  LayerSpec l = simple(id, std::move(name), LayerKind::Pool);
  l.kernel_h = l.kernel_w = k;
  l.stride = stride;
  return l;
}

inline LayerSpec fc(int id, std::string name, std::int64_t in, std::int64_t out) {
  LayerSpec l = simple(id, std::move(name), LayerKind::FullyConnected);
  l.in_channels = in;
  l.out_channels = out;
  l.bias = true;
  return l;
}

inline Edge seq(int from, int to) { return Edge{from, to, EdgeKind::Sequential}; }

/// conv(3->4) -> conv(4->2) -> pool -> fc(2*4*4 -> 3) on a 3x8x8 input.
inline ArchSpec two_conv_net() {
  return ArchSpec::create("two-conv", {3, 8, 8},
                          {conv(0, "c1", 3, 4), conv(1, "c2", 4, 2), pool(2, "pool", 2, 2), fc(3, "fc", 2 * 4 * 4, 3)},
                          {seq(0, 1), seq(1, 2), seq(2, 3)});
}

/// stem conv -> bn -> relu -> [conv a -> bn -> relu -> conv b -> bn] + identity -> relu -> pool -> fc.
/// The stem and conv b form one coupling group.
inline ArchSpec toy_residual_net(std::int64_t width = 8) {
  std::vector<LayerSpec> layers{
      conv(0, "stem", 3, width),
      simple(1, "stem.bn", LayerKind::BatchNorm),
      simple(2, "stem.relu", LayerKind::Activation),
      conv(3, "block.conv_a", width, width),
      simple(4, "block.conv_a.bn", LayerKind::BatchNorm),
      simple(5, "block.conv_a.relu", LayerKind::Activation),
      conv(6, "block.conv_b", width, width),
      simple(7, "block.conv_b.bn", LayerKind::BatchNorm),
      simple(8, "block.add", LayerKind::Add),
      simple(9, "block.relu", LayerKind::Activation),
      pool(10, "pool", 8, 8),
      fc(11, "fc", width, 5),
  };
  std::vector<Edge> edges{seq(0, 1), seq(1, 2), seq(2, 3), seq(3, 4), seq(4, 5), seq(5, 6), seq(6, 7),
                          Edge{7, 8, EdgeKind::ResidualAdd}, Edge{2, 8, EdgeKind::ResidualAdd},
                          seq(8, 9), seq(9, 10), seq(10, 11)};
  return ArchSpec::create("toy-residual", {3, 8, 8}, std::move(layers), std::move(edges));
}

/// Two inception-style branches concatenated, then a consumer conv.
inline ArchSpec toy_concat_net() {
  std::vector<LayerSpec> layers{
      conv(0, "stem", 3, 4),
      conv(1, "branch_a", 4, 3, 1, 1, 0),
      conv(2, "branch_b", 4, 5),
      simple(3, "cat", LayerKind::Concat),
      conv(4, "head", 8, 2, 1, 1, 0),
      pool(5, "pool", 4, 4),
      fc(6, "fc", 2, 2),
  };
  std::vector<Edge> edges{seq(0, 1), seq(0, 2), Edge{1, 3, EdgeKind::Concat}, Edge{2, 3, EdgeKind::Concat},
                          seq(3, 4), seq(4, 5), seq(5, 6)};
  return ArchSpec::create("toy-concat", {3, 4, 4}, std::move(layers), std::move(edges));
}

/// Sequential net mimicking the long-tail setting: the two input-side convs
/// run at full resolution with large-magnitude weights; the two deep convs
/// run after pooling with small-magnitude weights.
inline ArchSpec longtail_net() {
  std::vector<LayerSpec> layers{
      conv(0, "bottom1", 3, 32),
      conv(1, "bottom2", 32, 32),
      pool(2, "pool1", 4, 4),
      conv(3, "top1", 32, 32),
      conv(4, "top2", 32, 32),
      pool(5, "pool2", 8, 8),
      fc(6, "fc", 32, 10),
  };
  std::vector<Edge> edges{seq(0, 1), seq(1, 2), seq(2, 3), seq(3, 4), seq(4, 5), seq(5, 6)};
  return ArchSpec::create("longtail", {3, 32, 32}, std::move(layers), std::move(edges));
}

inline Tensor random_tensor(std::vector<std::uint32_t> dims, Rng& rng, double scale) {
  Tensor t{std::move(dims), {}};
  t.data.resize(t.element_count());
  for (auto& v : t.data) v = static_cast<float>(rng.normal() * scale);
  return t;
}

/// Gaussian weights for every conv of `longtail_net()`: bottom layers with
/// standard deviation 1, top layers 0.1.
inline WeightStore longtail_weights(std::uint64_t seed) {
  Rng rng(seed);
  const auto arch = longtail_net();
  WeightStore store;
  for (const auto& l : arch.layers()) {
    if (l.kind != LayerKind::Conv) continue;
    const double scale = l.name.starts_with("bottom") ? 1.0 : 0.1;
    store.insert(weight_key(l.name),
                 random_tensor({static_cast<std::uint32_t>(l.out_channels), static_cast<std::uint32_t>(l.in_channels),
                                static_cast<std::uint32_t>(l.kernel_h), static_cast<std::uint32_t>(l.kernel_w)},
                               rng, scale));
  }
  return store;
}

inline FilterMatrix random_filters(std::size_t n, std::size_t d, Rng& rng) {
  FilterMatrix m(n, d);
  for (auto& v : m.values) v = rng.normal();
  return m;
}

}  // namespace clrprune::testing

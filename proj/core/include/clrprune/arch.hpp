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

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace clrprune {

enum class LayerKind { Conv, FullyConnected, BatchNorm, Pool, Add, Concat, Activation };
enum class EdgeKind { Sequential, ResidualAdd, Concat };

const char* to_string(LayerKind kind);
const char* to_string(EdgeKind kind);
LayerKind parse_layer_kind(std::string_view text);
EdgeKind parse_edge_kind(std::string_view text);

struct Shape3 {
  std::int64_t channels = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;

  std::int64_t elements() const { return channels * height * width; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// One node of the architecture graph.
///
/// `in_channels`/`out_channels` are mandatory for conv and fully-connected
/// layers. For the remaining kinds they may be left at zero and are filled in
/// by shape inference. For fully-connected layers `in_channels` is the
/// flattened feature count (channels * height * width of the input).
struct LayerSpec {
  int id = 0;
  std::string name;
  LayerKind kind = LayerKind::Conv;
  std::int64_t out_channels = 0;
  std::int64_t in_channels = 0;
  std::int64_t kernel_h = 1;
  std::int64_t kernel_w = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  bool bias = false;
  // Derived.
  std::int64_t out_h = 0;
  std::int64_t out_w = 0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct Edge {
  int from = 0;
  int to = 0;
  EdgeKind kind = EdgeKind::Sequential;

  friend bool operator==(const Edge&, const Edge&) = default;
};

using LayerGroup = std::vector<int>;

/// Validated, immutable CNN architecture graph.
///
/// Construction runs shape inference in topological order and checks every
/// graph invariant; an ArchSpec that exists is always consistent. Layers with
/// no producer edge consume the network input.
class ArchSpec {
 public:
  static ArchSpec create(std::string name, Shape3 input_shape,
                         std::vector<LayerSpec> layers, std::vector<Edge> edges);

  const std::string& name() const { return name_; }
  const Shape3& input_shape() const { return input_shape_; }
  std::span<const LayerSpec> layers() const { return layers_; }
  std::span<const Edge> edges() const { return edges_; }

  const LayerSpec& layer(int id) const;
  const LayerSpec* find(std::string_view name) const;
  bool contains(int id) const { return index_.count(id) != 0; }

  /// Producers in edge-declaration order (concat branch order).
  std::span<const int> producers(int id) const;
  std::span<const int> consumers(int id) const;
  std::span<const int> topological_order() const { return topo_; }

  Shape3 input_of(int id) const;
  Shape3 output_of(int id) const;

  /// Sets of conv layers whose output channel counts must stay equal.
  const std::vector<LayerGroup>& coupling_groups() const { return groups_; }
  /// Conv layers whose filters may be removed, ascending by id.
  const std::vector<int>& prunable_layers() const { return prunable_; }
  bool is_prunable(int id) const;

  friend bool operator==(const ArchSpec& a, const ArchSpec& b) {
    return a.name_ == b.name_ && a.input_shape_ == b.input_shape_ &&
           a.layers_ == b.layers_ && a.edges_ == b.edges_;
  }

 private:
  ArchSpec() = default;
  std::size_t index_of(int id) const;
  void resolve();
  void derive_coupling();

  std::string name_;
  Shape3 input_shape_;
  std::vector<LayerSpec> layers_;
  std::vector<Edge> edges_;

  std::map<int, std::size_t> index_;
  std::vector<std::vector<int>> producers_;
  std::vector<std::vector<int>> consumers_;
  std::vector<int> topo_;
  std::vector<Shape3> inputs_;
  std::vector<Shape3> outputs_;
  std::vector<LayerGroup> groups_;
  std::vector<int> prunable_;
};

/// Free-function form of ArchSpec::coupling_groups().
std::vector<LayerGroup> coupling_groups(const ArchSpec& arch);

ArchSpec parse_arch(std::string_view json_text);
ArchSpec load_arch(const std::string& path);
std::string dump_arch(const ArchSpec& arch);
void save_arch(const ArchSpec& arch, const std::string& path);

}  // namespace clrprune

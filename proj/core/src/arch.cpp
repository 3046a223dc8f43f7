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

#include "clrprune/arch.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <sstream>

#include "clrprune/error.hpp"

namespace clrprune {

namespace {

std::string describe(const LayerSpec& l) {
  std::ostringstream os;
  os << "layer '" << l.name << "' (id " << l.id << ")";
  return os.str();
}

bool channel_preserving(LayerKind kind) {
  return kind == LayerKind::BatchNorm || kind == LayerKind::Activation ||
         kind == LayerKind::Pool;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::FullyConnected: return "fully-connected";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::Pool: return "pool";
    case LayerKind::Add: return "add";
    case LayerKind::Concat: return "concat";
    case LayerKind::Activation: return "activation";
  }
  return "?";
}

const char* to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Sequential: return "sequential";
    case EdgeKind::ResidualAdd: return "residual-add";
    case EdgeKind::Concat: return "concat";
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view text) {
  for (auto kind : {LayerKind::Conv, LayerKind::FullyConnected, LayerKind::BatchNorm,
                    LayerKind::Pool, LayerKind::Add, LayerKind::Concat,
                    LayerKind::Activation}) {
    if (text == to_string(kind)) return kind;
  }
  fail(ErrorKind::Format, "unknown layer kind '" + std::string(text) + "'");
}

EdgeKind parse_edge_kind(std::string_view text) {
  for (auto kind : {EdgeKind::Sequential, EdgeKind::ResidualAdd, EdgeKind::Concat}) {
    if (text == to_string(kind)) return kind;
  }
  fail(ErrorKind::Format, "unknown edge kind '" + std::string(text) + "'");
}

ArchSpec ArchSpec::create(std::string name, Shape3 input_shape,
                          std::vector<LayerSpec> layers, std::vector<Edge> edges) {
  ArchSpec arch;
  arch.name_ = std::move(name);
  arch.input_shape_ = input_shape;
  arch.layers_ = std::move(layers);
  arch.edges_ = std::move(edges);
  arch.resolve();
  arch.derive_coupling();
  return arch;
}

std::size_t ArchSpec::index_of(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    fail(ErrorKind::Structural, "no layer with id " + std::to_string(id));
  }
  return it->second;
}

const LayerSpec& ArchSpec::layer(int id) const { return layers_[index_of(id)]; }

const LayerSpec* ArchSpec::find(std::string_view name) const {
  for (const auto& l : layers_) {
    if (l.name == name) return &l;
  }
  return nullptr;
}

std::span<const int> ArchSpec::producers(int id) const { return producers_[index_of(id)]; }
std::span<const int> ArchSpec::consumers(int id) const { return consumers_[index_of(id)]; }
Shape3 ArchSpec::input_of(int id) const { return inputs_[index_of(id)]; }
Shape3 ArchSpec::output_of(int id) const { return outputs_[index_of(id)]; }

bool ArchSpec::is_prunable(int id) const {
  return std::binary_search(prunable_.begin(), prunable_.end(), id);
}

void ArchSpec::resolve() {
  if (layers_.empty()) fail(ErrorKind::Structural, "architecture '" + name_ + "' has no layers");
  if (input_shape_.channels < 1 || input_shape_.height < 1 || input_shape_.width < 1) {
    fail(ErrorKind::Structural, "input_shape must be positive in every dimension");
  }

  std::set<std::string> names;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.name.empty()) fail(ErrorKind::Structural, "layer id " + std::to_string(l.id) + " has an empty name");
    if (!index_.emplace(l.id, i).second) {
      fail(ErrorKind::Structural, "duplicate layer id " + std::to_string(l.id));
    }
    if (!names.insert(l.name).second) fail(ErrorKind::Structural, "duplicate layer name '" + l.name + "'");
  }

  const std::size_t n = layers_.size();
  producers_.assign(n, {});
  consumers_.assign(n, {});
  std::vector<std::vector<EdgeKind>> in_kinds(n);
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges_) {
    if (!index_.count(e.from) || !index_.count(e.to)) {
      fail(ErrorKind::Structural, "edge " + std::to_string(e.from) + " -> " + std::to_string(e.to) +
                                      " references an unknown layer");
    }
    if (e.from == e.to) fail(ErrorKind::Structural, "self-loop on layer id " + std::to_string(e.from));
    if (!seen.emplace(e.from, e.to).second) {
      fail(ErrorKind::Structural, "duplicate edge " + std::to_string(e.from) + " -> " + std::to_string(e.to));
    }
    producers_[index_.at(e.to)].push_back(e.from);
    in_kinds[index_.at(e.to)].push_back(e.kind);
    consumers_[index_.at(e.from)].push_back(e.to);
  }

  // Edge kinds must agree with the consuming layer.
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = layers_[i];
    const auto& kinds = in_kinds[i];
    EdgeKind expected = l.kind == LayerKind::Add      ? EdgeKind::ResidualAdd
                        : l.kind == LayerKind::Concat ? EdgeKind::Concat
                                                      : EdgeKind::Sequential;
    for (auto k : kinds) {
      if (k != expected) {
        fail(ErrorKind::Structural, describe(l) + " of kind " + to_string(l.kind) +
                                        " cannot take a " + to_string(k) + " input edge");
      }
    }
    if (l.kind == LayerKind::Add && kinds.size() < 2) {
      fail(ErrorKind::Structural, describe(l) + " needs at least two residual-add operands");
    }
    if (l.kind == LayerKind::Concat && kinds.empty()) {
      fail(ErrorKind::Structural, describe(l) + " has no concat inputs");
    }
    if (expected == EdgeKind::Sequential && kinds.size() > 1) {
      fail(ErrorKind::Structural, describe(l) + " has more than one sequential producer");
    }
  }

  // Kahn's algorithm, ties resolved by declaration order.
  std::vector<std::size_t> indegree(n);
  for (std::size_t i = 0; i < n; ++i) indegree[i] = producers_[i].size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  while (!ready.empty()) {
    std::size_t i = ready.top();
    ready.pop();
    topo_.push_back(layers_[i].id);
    for (int c : consumers_[i]) {
      if (--indegree[index_.at(c)] == 0) ready.push(index_.at(c));
    }
  }
  if (topo_.size() != n) fail(ErrorKind::Structural, "architecture graph contains a cycle");

  inputs_.assign(n, {});
  outputs_.assign(n, {});
  for (int id : topo_) {
    const std::size_t i = index_.at(id);
    auto& l = layers_[i];
    const auto& prods = producers_[i];

    Shape3 in = input_shape_;
    if (l.kind == LayerKind::Concat) {
      in = outputs_[index_.at(prods.front())];
      in.channels = 0;
      for (int p : prods) {
        const Shape3& s = outputs_[index_.at(p)];
        if (s.height != in.height || s.width != in.width) {
          fail(ErrorKind::Shape, describe(l) + ": concat inputs disagree in spatial size");
        }
        in.channels += s.channels;
      }
    } else if (l.kind == LayerKind::Add) {
      in = outputs_[index_.at(prods.front())];
      for (int p : prods) {
        if (!(outputs_[index_.at(p)] == in)) {
          fail(ErrorKind::Shape, describe(l) + ": residual-add operands have different shapes");
        }
      }
    } else if (!prods.empty()) {
      in = outputs_[index_.at(prods.front())];
    }
    inputs_[i] = in;

    Shape3 out = in;
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::Pool: {
        if (l.kernel_h < 1 || l.kernel_w < 1 || l.stride < 1 || l.padding < 0) {
          fail(ErrorKind::Shape, describe(l) + ": kernel and stride must be >= 1, padding >= 0");
        }
        const std::int64_t hp = in.height + 2 * l.padding - l.kernel_h;
        const std::int64_t wp = in.width + 2 * l.padding - l.kernel_w;
        if (hp < 0 || wp < 0) fail(ErrorKind::Shape, describe(l) + ": kernel larger than padded input");
        out.height = hp / l.stride + 1;
        out.width = wp / l.stride + 1;
        if (l.kind == LayerKind::Conv) {
          if (l.out_channels < 1 || l.in_channels < 1) {
            fail(ErrorKind::Shape, describe(l) + ": in_channels and out_channels must be >= 1");
          }
          if (l.in_channels != in.channels) {
            fail(ErrorKind::Shape, describe(l) + ": declares " + std::to_string(l.in_channels) +
                                       " input channels but receives " + std::to_string(in.channels));
          }
          out.channels = l.out_channels;
        }
        break;
      }
      case LayerKind::FullyConnected:
        if (l.out_channels < 1 || l.in_channels < 1) {
          fail(ErrorKind::Shape, describe(l) + ": in_channels and out_channels must be >= 1");
        }
        if (l.in_channels != in.elements()) {
          fail(ErrorKind::Shape, describe(l) + ": declares " + std::to_string(l.in_channels) +
                                     " input features but receives " + std::to_string(in.elements()));
        }
        out = Shape3{l.out_channels, 1, 1};
        break;
      default:
        break;
    }
    if (l.kind != LayerKind::Conv && l.kind != LayerKind::FullyConnected) {
      if ((l.in_channels != 0 && l.in_channels != in.channels) ||
          (l.out_channels != 0 && l.out_channels != out.channels)) {
        fail(ErrorKind::Shape, describe(l) + ": declared channel counts disagree with its inputs");
      }
      l.in_channels = in.channels;
      l.out_channels = out.channels;
    }
    l.out_h = out.height;
    l.out_w = out.width;
    outputs_[i] = out;
  }
}

void ArchSpec::derive_coupling() {
  const std::size_t n = layers_.size();
  // Node n stands for "anchored": the network input, a concat or an FC output.
  DisjointSets sets(n + 1);
  const std::size_t anchored = n;

  auto channel_source = [&](int id) {
    // Walk back through layers that forward their channels unchanged.
    while (true) {
      const auto& l = layers_[index_.at(id)];
      if (!channel_preserving(l.kind)) return std::optional<int>(id);
      const auto& prods = producers_[index_.at(id)];
      if (prods.empty()) return std::optional<int>();
      id = prods.front();
    }
  };

  std::vector<bool> in_group(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (layers_[i].kind != LayerKind::Add) continue;
    in_group[i] = true;
    for (int p : producers_[i]) {
      auto src = channel_source(p);
      if (!src) {
        sets.unite(i, anchored);
        continue;
      }
      const std::size_t s = index_.at(*src);
      const LayerKind k = layers_[s].kind;
      if (k == LayerKind::Conv || k == LayerKind::Add) {
        sets.unite(i, s);
        in_group[s] = true;
      } else {
        sets.unite(i, anchored);
      }
    }
  }

  // Convs whose channels reach a network output unchanged must keep them.
  std::vector<bool> fixed(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (layers_[i].kind != LayerKind::Conv) continue;
    std::vector<std::size_t> stack{i};
    std::set<std::size_t> visited;
    while (!stack.empty() && !fixed[i]) {
      std::size_t cur = stack.back();
      stack.pop_back();
      if (!visited.insert(cur).second) continue;
      if (consumers_[cur].empty()) {
        fixed[i] = true;
        break;
      }
      for (int c : consumers_[cur]) {
        const std::size_t ci = index_.at(c);
        const LayerKind k = layers_[ci].kind;
        if (k != LayerKind::Conv && k != LayerKind::FullyConnected) stack.push_back(ci);
      }
    }
    if (fixed[i] && in_group[i]) sets.unite(i, anchored);
  }

  std::map<std::size_t, LayerGroup> by_root;
  for (std::size_t i = 0; i < n; ++i) {
    if (layers_[i].kind == LayerKind::Conv && in_group[i]) {
      by_root[sets.find(i)].push_back(layers_[i].id);
    }
  }
  const std::size_t anchored_root = sets.find(anchored);
  std::set<int> blocked;
  for (auto& [root, members] : by_root) {
    std::sort(members.begin(), members.end());
    if (root == anchored_root) blocked.insert(members.begin(), members.end());
    groups_.push_back(members);
  }
  std::sort(groups_.begin(), groups_.end());

  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = layers_[i];
    if (l.kind == LayerKind::Conv && !fixed[i] && !blocked.count(l.id)) prunable_.push_back(l.id);
  }
  std::sort(prunable_.begin(), prunable_.end());
}

std::vector<LayerGroup> coupling_groups(const ArchSpec& arch) { return arch.coupling_groups(); }

}  // namespace clrprune

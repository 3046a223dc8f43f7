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
#include <string>
#include <vector>

#include "clrprune/arch.hpp"
#include "clrprune/weights.hpp"

namespace clrprune {

struct LayerCost {
  int layer_id = 0;
  std::uint64_t flops = 0;
};

/// FLOPs per conv layer, keyed by layer name.
using CostTable = std::map<std::string, LayerCost, std::less<>>;

CostTable conv_costs(const ArchSpec& arch);

struct LayerScores {
  int layer_id = 0;
  std::string name;
  std::vector<double> scores;  // aligned with the layer's weight tensor
};

/// Computation-aware importance of every conv weight, ascending by layer id.
struct ImportanceScores {
  std::vector<LayerScores> layers;
  std::size_t total() const;
};

/// theta = |w| / flops^lambda for every rank-4 "<layer>.weight" tensor.
/// lambda = 0 reduces to plain magnitude. A conv weight tensor without a
/// cost entry is a configuration error.
ImportanceScores weight_importance(const WeightStore& store, const CostTable& costs, double lambda);

struct LayerMask {
  int layer_id = 0;
  std::string name;
  std::vector<bool> keep;

  std::size_t zeroed() const;
};

struct SparsityMask {
  std::vector<LayerMask> layers;
  std::size_t total() const;
  std::size_t zeroed() const;
};

/// Number of weights zeroed at global rate p over n weights: round(p * n),
/// halves away from zero.
std::size_t zeroed_count(double p, std::size_t n);

/// Zeroes the zeroed_count(p, N) globally lowest scores. Ties at the
/// threshold go to the smallest (layer id, filter, element) first.
SparsityMask global_prune_mask(const ImportanceScores& scores, double p);

/// Fraction of zeroed weights per layer id. Empty layers are omitted.
std::map<int, double> per_layer_rates(const SparsityMask& mask);

struct LayerPlan {
  int layer_id = 0;
  std::string name;
  std::int64_t filters = 0;  // n_i
  double sparsity = 0.0;     // rate read off the mask, before coupling
  double rate = 0.0;         // p_i after coupling resolution
  std::int64_t keep = 0;     // preserved filter count
};

struct StructurePlan {
  double p = 0.0;
  double lambda = 0.0;
  std::vector<LayerPlan> layers;  // prunable conv layers, ascending id

  const LayerPlan* find(int layer_id) const;
};

/// Preserved filter count: round((1 - rate) * filters) clamped to [1, filters].
std::int64_t preserved_count(double rate, std::int64_t filters);

/// Builds per-layer targets for every prunable conv layer of `arch`.
/// Coupled layers take the arithmetic mean of their members' rates.
StructurePlan resolve_structure(const std::map<int, double>& rates, const ArchSpec& arch,
                                const std::vector<LayerGroup>& groups);

/// Whole cross-layer ranking pass: bind, score, mask, rates, structure.
StructurePlan plan_structure(const ArchSpec& arch, const WeightStore& store, double p, double lambda);

std::string dump_structure(const StructurePlan& plan);

}  // namespace clrprune

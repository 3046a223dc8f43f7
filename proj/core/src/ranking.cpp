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

#include "clrprune/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "clrprune/counting.hpp"
#include "clrprune/error.hpp"

namespace clrprune {

namespace {

constexpr std::string_view kWeightSuffix = ".weight";

}  // namespace

CostTable conv_costs(const ArchSpec& arch) {
  const auto flops = compute_layer_flops(arch);
  CostTable costs;
  for (const auto& l : arch.layers()) {
    if (l.kind == LayerKind::Conv) costs[l.name] = LayerCost{l.id, flops.at(l.id)};
  }
  return costs;
}

std::size_t ImportanceScores::total() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.scores.size();
  return n;
}

ImportanceScores weight_importance(const WeightStore& store, const CostTable& costs, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    fail(ErrorKind::Usage, "lambda must be a finite value >= 0");
  }
  ImportanceScores out;
  for (const auto& [key, tensor] : store) {
    if (tensor.rank() != 4 || key.size() <= kWeightSuffix.size() ||
        !key.ends_with(kWeightSuffix)) {
      continue;
    }
    const std::string_view layer = std::string_view(key).substr(0, key.size() - kWeightSuffix.size());
    auto it = costs.find(layer);
    if (it == costs.end()) {
      fail(ErrorKind::Config, "conv weights '" + key + "' have no FLOPs entry for layer '" +
                                  std::string(layer) + "'");
    }
    if (it->second.flops < 1) {
      fail(ErrorKind::Config, "layer '" + std::string(layer) + "' has a FLOPs count of zero");
    }
    const double divisor = std::pow(static_cast<double>(it->second.flops), lambda);
    LayerScores scores{it->second.layer_id, std::string(layer), {}};
    scores.scores.resize(tensor.data.size());
    for (std::size_t q = 0; q < tensor.data.size(); ++q) {
      scores.scores[q] = std::fabs(static_cast<double>(tensor.data[q])) / divisor;
    }
    out.layers.push_back(std::move(scores));
  }
  std::sort(out.layers.begin(), out.layers.end(),
            [](const LayerScores& a, const LayerScores& b) { return a.layer_id < b.layer_id; });
  for (std::size_t i = 1; i < out.layers.size(); ++i) {
    if (out.layers[i].layer_id == out.layers[i - 1].layer_id) {
      fail(ErrorKind::Config, "layers '" + out.layers[i - 1].name + "' and '" + out.layers[i].name +
                                  "' share layer id " + std::to_string(out.layers[i].layer_id));
    }
  }
  return out;
}

std::size_t LayerMask::zeroed() const {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), false));
}

std::size_t SparsityMask::total() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.keep.size();
  return n;
}

std::size_t SparsityMask::zeroed() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.zeroed();
  return n;
}

std::size_t zeroed_count(double p, std::size_t n) {
  return static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
}

SparsityMask global_prune_mask(const ImportanceScores& scores, double p) {
  if (!(p >= 0.0 && p < 1.0)) fail(ErrorKind::Usage, "global pruning rate p must lie in [0, 1)");
  SparsityMask mask;
  for (const auto& l : scores.layers) {
    mask.layers.push_back(LayerMask{l.layer_id, l.name, std::vector<bool>(l.scores.size(), true)});
  }
  const std::size_t target = zeroed_count(p, scores.total());
  if (target == 0) return mask;

  std::vector<double> all;
  all.reserve(scores.total());
  for (const auto& l : scores.layers) all.insert(all.end(), l.scores.begin(), l.scores.end());
  auto nth = all.begin() + static_cast<std::ptrdiff_t>(target - 1);
  std::nth_element(all.begin(), nth, all.end());
  const double threshold = *nth;
  const auto below = static_cast<std::size_t>(
      std::count_if(all.begin(), all.end(), [&](double s) { return s < threshold; }));
  all = {};

  // Everything strictly below the threshold goes; ties take the earliest
  // (layer, index) positions until the target is met.
  std::size_t ties_left = target - below;
  for (std::size_t li = 0; li < scores.layers.size(); ++li) {
    const auto& s = scores.layers[li].scores;
    auto& keep = mask.layers[li].keep;
    for (std::size_t q = 0; q < s.size(); ++q) {
      if (s[q] < threshold) {
        keep[q] = false;
      } else if (s[q] == threshold && ties_left > 0) {
        keep[q] = false;
        --ties_left;
      }
    }
  }
  return mask;
}

std::map<int, double> per_layer_rates(const SparsityMask& mask) {
  std::map<int, double> rates;
  for (const auto& l : mask.layers) {
    if (l.keep.empty()) continue;
    rates[l.layer_id] = static_cast<double>(l.zeroed()) / static_cast<double>(l.keep.size());
  }
  return rates;
}

const LayerPlan* StructurePlan::find(int layer_id) const {
  for (const auto& l : layers) {
    if (l.layer_id == layer_id) return &l;
  }
  return nullptr;
}

std::int64_t preserved_count(double rate, std::int64_t filters) {
  const auto kept = static_cast<std::int64_t>(std::llround((1.0 - rate) * static_cast<double>(filters)));
  return std::clamp<std::int64_t>(kept, 1, filters);
}

StructurePlan resolve_structure(const std::map<int, double>& rates, const ArchSpec& arch,
                                const std::vector<LayerGroup>& groups) {
  StructurePlan plan;
  std::map<int, double> resolved;
  for (int id : arch.prunable_layers()) {
    auto it = rates.find(id);
    if (it == rates.end()) {
      fail(ErrorKind::Config, "no pruning rate for prunable layer '" + arch.layer(id).name + "'");
    }
    if (!(it->second >= 0.0 && it->second <= 1.0)) {
      fail(ErrorKind::Config, "pruning rate of layer '" + arch.layer(id).name + "' is outside [0, 1]");
    }
    resolved[id] = it->second;
  }

  for (const auto& group : groups) {
    const bool prunable = std::any_of(group.begin(), group.end(), [&](int id) { return arch.is_prunable(id); });
    if (!prunable) continue;
    double sum = 0.0;
    for (int id : group) {
      auto it = rates.find(id);
      if (it == rates.end() || !arch.is_prunable(id)) {
        fail(ErrorKind::Config, "coupled layer id " + std::to_string(id) + " has no pruning rate");
      }
      sum += it->second;
      if (arch.layer(id).out_channels != arch.layer(group.front()).out_channels) {
        fail(ErrorKind::Structural, "coupled layers '" + arch.layer(group.front()).name + "' and '" +
                                        arch.layer(id).name + "' have different filter counts");
      }
    }
    const double mean = sum / static_cast<double>(group.size());
    for (int id : group) resolved[id] = mean;
  }

  for (const auto& [id, rate] : resolved) {
    const auto& l = arch.layer(id);
    plan.layers.push_back(
        LayerPlan{id, l.name, l.out_channels, rates.at(id), rate, preserved_count(rate, l.out_channels)});
  }
  return plan;
}

StructurePlan plan_structure(const ArchSpec& arch, const WeightStore& store, double p, double lambda) {
  check_binding(arch, store, /*require_conv_weights=*/true);
  const auto scores = weight_importance(store, conv_costs(arch), lambda);
  const auto mask = global_prune_mask(scores, p);
  auto plan = resolve_structure(per_layer_rates(mask), arch, arch.coupling_groups());
  plan.p = p;
  plan.lambda = lambda;
  return plan;
}

std::string dump_structure(const StructurePlan& plan) {
  nlohmann::ordered_json doc;
  doc["p"] = plan.p;
  doc["lambda"] = plan.lambda;
  auto layers = nlohmann::ordered_json::array();
  for (const auto& l : plan.layers) {
    layers.push_back({{"layer_id", l.layer_id},
                      {"name", l.name},
                      {"filters", l.filters},
                      {"sparsity", l.sparsity},
                      {"rate", l.rate},
                      {"keep", l.keep}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump(1) + "\n";
}

}  // namespace clrprune

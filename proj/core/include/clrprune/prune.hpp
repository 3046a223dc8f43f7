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
#include <string_view>
#include <vector>

#include "clrprune/arch.hpp"
#include "clrprune/counting.hpp"
#include "clrprune/ranking.hpp"
#include "clrprune/selection.hpp"
#include "clrprune/weights.hpp"

namespace clrprune {

inline constexpr const char* kToolVersion = "1.0.0";

struct Provenance {
  double lambda = 0.0;
  double p = 0.0;
  Selector selector = Selector::Rnf;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
};

/// Structure targets plus the filters each prunable layer keeps.
struct PrunePlan {
  StructurePlan structure;
  std::map<int, SelectionResult> selections;  // keyed by layer id
  Provenance provenance;
};

/// Runs `selector` on every layer of `structure` against the layer's weights.
PrunePlan select_plan(const ArchSpec& arch, const WeightStore& store, const StructurePlan& structure,
                      Selector selector, std::uint64_t seed);

/// A plan that keeps every filter of every prunable layer.
PrunePlan identity_plan(const ArchSpec& arch);

/// Checks sizes, ranges and coupling of `plan` against `arch`.
void validate_plan(const ArchSpec& arch, const PrunePlan& plan);

struct PruneResult {
  ArchSpec arch;
  WeightStore weights;
};

/// Removes unselected filters and every downstream slice that consumed them.
///
/// Each layer carries a map from its output channels to the original channel
/// they came from. Convs take their kept set; batchnorm, activation and pool
/// layers forward their input map; concat stacks its inputs' maps in branch
/// order; an add adopts the map of its first operand, so residual operands are
/// paired by position. Consumers slice their input channels (for FC layers
/// every spatial position of a channel) through the map.
PruneResult apply_plan(const ArchSpec& arch, const WeightStore& store, const PrunePlan& plan);

/// Architecture implied by `structure` alone (the first keep filters of each
/// layer stand in for the selection; shapes do not depend on which are kept).
ArchSpec pruned_structure(const ArchSpec& arch, const StructurePlan& structure);

std::string dump_plan(const PrunePlan& plan);
PrunePlan parse_plan(std::string_view json_text);
PrunePlan load_plan(const std::string& path);

// ---------------------------------------------------------------------------
// Reports

/// "81.31M (74.1%)": counts in millions (billions from 1e9 up) with two
/// decimals, then the reduction (1 - after/before) * 100 with one decimal.
/// The pruned value uses the baseline's unit.
std::string format_count(std::uint64_t value);
double reduction_percent(std::uint64_t before, std::uint64_t after);
std::string format_with_reduction(std::uint64_t before, std::uint64_t after);

struct ReductionRow {
  std::string layer;  // "total" for the summary row
  std::uint64_t flops_before = 0;
  std::uint64_t flops_after = 0;
  std::uint64_t params_before = 0;
  std::uint64_t params_after = 0;
};

struct ReductionReport {
  std::vector<ReductionRow> layers;  // layers with nonzero cost, by name match
  ReductionRow total;
};

/// Layers are matched by name; layers absent from `after` count as zero.
ReductionReport reduction_report(const ArchSpec& before, const ArchSpec& after,
                                 const CountOptions& options = {});
std::string reduction_csv(const ReductionReport& report);
std::string reduction_json(const ReductionReport& report);

struct LongtailLayer {
  int layer_id = 0;
  std::string name;
  std::uint64_t flops = 0;
  std::size_t weights = 0;
  std::vector<double> fractions;  // one per bin, summing to 1
  double rate_magnitude = 0.0;    // per-layer sparsity at lambda = 0
  double rate_lambda = 0.0;       // per-layer sparsity at the configured lambda
};

struct LongtailReport {
  std::vector<double> edges;
  std::vector<LongtailLayer> layers;
};

/// Histogram of |w| per conv layer over the bins [e_k, e_{k+1}). Values below
/// the first edge fall in the first bin and values at or above the last edge
/// in the last bin, so each row sums to 1.
LongtailReport longtail_report(const ArchSpec& arch, const WeightStore& store,
                               const std::vector<double>& edges, double p, double lambda);
std::string longtail_histogram_csv(const LongtailReport& report);
std::string longtail_rates_csv(const LongtailReport& report);

double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

}  // namespace clrprune

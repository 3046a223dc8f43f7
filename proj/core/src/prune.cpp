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

#include "clrprune/prune.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "clrprune/error.hpp"

namespace clrprune {

namespace {

using ChannelMap = std::vector<std::int64_t>;

ChannelMap identity_map(std::int64_t n) {
  ChannelMap m(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i;
  return m;
}

/// Splits "<layer>.<param>" at the last dot.
std::pair<std::string_view, std::string_view> split_key(std::string_view key) {
  const auto dot = key.rfind('.');
  if (dot == std::string_view::npos) return {key, {}};
  return {key.substr(0, dot), key.substr(dot + 1)};
}

Tensor slice_vector(const Tensor& t, const ChannelMap& keep) {
  Tensor out{{static_cast<std::uint32_t>(keep.size())}, {}};
  out.data.reserve(keep.size());
  for (auto c : keep) out.data.push_back(t.data.at(static_cast<std::size_t>(c)));
  return out;
}

Tensor slice_conv(const Tensor& t, const ChannelMap& rows, const ChannelMap& channels) {
  const std::size_t in_c = t.dims[1];
  const std::size_t spatial = static_cast<std::size_t>(t.dims[2]) * t.dims[3];
  Tensor out{{static_cast<std::uint32_t>(rows.size()), static_cast<std::uint32_t>(channels.size()), t.dims[2],
              t.dims[3]},
             {}};
  out.data.reserve(rows.size() * channels.size() * spatial);
  for (auto r : rows) {
    for (auto c : channels) {
      const auto* src = t.data.data() + (static_cast<std::size_t>(r) * in_c + static_cast<std::size_t>(c)) * spatial;
      out.data.insert(out.data.end(), src, src + spatial);
    }
  }
  return out;
}

Tensor slice_columns(const Tensor& t, const ChannelMap& columns) {
  const std::size_t rows = t.dims[0];
  const std::size_t cols = t.dims[1];
  Tensor out{{t.dims[0], static_cast<std::uint32_t>(columns.size())}, {}};
  out.data.reserve(rows * columns.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto c : columns) out.data.push_back(t.data[r * cols + static_cast<std::size_t>(c)]);
  }
  return out;
}

std::string fixed(double v, int decimals) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(decimals);
  os << v;
  return os.str();
}

std::string general(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

PrunePlan select_plan(const ArchSpec& arch, const WeightStore& store, const StructurePlan& structure,
                      Selector selector, std::uint64_t seed) {
  PrunePlan plan;
  plan.structure = structure;
  plan.provenance = Provenance{structure.lambda, structure.p, selector, seed, kToolVersion};
  for (const auto& lp : structure.layers) {
    const auto& layer = arch.layer(lp.layer_id);
    const auto filters = flatten_filters(store.at(weight_key(layer.name)));
    plan.selections[lp.layer_id] =
        select_filters(selector, filters, static_cast<std::size_t>(lp.keep), seed, lp.layer_id);
  }
  return plan;
}

PrunePlan identity_plan(const ArchSpec& arch) {
  PrunePlan plan;
  for (int id : arch.prunable_layers()) {
    const auto& l = arch.layer(id);
    plan.structure.layers.push_back(LayerPlan{id, l.name, l.out_channels, 0.0, 0.0, l.out_channels});
    SelectionResult sel;
    sel.layer_id = id;
    sel.kept.resize(static_cast<std::size_t>(l.out_channels));
    for (std::size_t i = 0; i < sel.kept.size(); ++i) sel.kept[i] = i;
    sel.final_k = sel.kept.size();
    plan.selections[id] = std::move(sel);
  }
  return plan;
}

void validate_plan(const ArchSpec& arch, const PrunePlan& plan) {
  for (const auto& lp : plan.structure.layers) {
    if (!arch.contains(lp.layer_id)) {
      fail(ErrorKind::Structural, "plan names layer id " + std::to_string(lp.layer_id) + " which is not in the architecture");
    }
    const auto& l = arch.layer(lp.layer_id);
    if (!arch.is_prunable(l.id)) fail(ErrorKind::Structural, "plan prunes layer '" + l.name + "' which is not prunable");
    if (lp.filters != l.out_channels) {
      fail(ErrorKind::Structural, "plan expects " + std::to_string(lp.filters) + " filters in layer '" + l.name +
                                      "' but the architecture has " + std::to_string(l.out_channels));
    }
    if (!plan.selections.count(l.id)) fail(ErrorKind::Structural, "plan has no selection for layer '" + l.name + "'");
  }
  for (const auto& [id, sel] : plan.selections) {
    if (!arch.contains(id)) {
      fail(ErrorKind::Structural, "selection for unknown layer id " + std::to_string(id));
    }
    const auto& l = arch.layer(id);
    if (!arch.is_prunable(id)) fail(ErrorKind::Structural, "selection for layer '" + l.name + "' which is not prunable");
    if (sel.kept.empty()) fail(ErrorKind::Structural, "selection for layer '" + l.name + "' keeps no filters");
    for (std::size_t i = 0; i < sel.kept.size(); ++i) {
      if (sel.kept[i] >= static_cast<std::size_t>(l.out_channels) || (i > 0 && sel.kept[i] <= sel.kept[i - 1])) {
        fail(ErrorKind::Structural, "selection for layer '" + l.name + "' is not a strictly increasing set of filter indices");
      }
    }
    if (const auto* lp = plan.structure.find(id); lp && static_cast<std::size_t>(lp->keep) != sel.kept.size()) {
      fail(ErrorKind::Structural, "selection for layer '" + l.name + "' keeps " + std::to_string(sel.kept.size()) +
                                      " filters, structure asks for " + std::to_string(lp->keep));
    }
  }
  for (const auto& group : arch.coupling_groups()) {
    auto kept_count = [&](int id) {
      auto it = plan.selections.find(id);
      return it == plan.selections.end() ? static_cast<std::size_t>(arch.layer(id).out_channels) : it->second.kept.size();
    };
    for (int id : group) {
      if (kept_count(id) != kept_count(group.front())) {
        fail(ErrorKind::Structural, "coupled layers '" + arch.layer(group.front()).name + "' and '" +
                                        arch.layer(id).name + "' keep different filter counts");
      }
    }
  }
}

PruneResult apply_plan(const ArchSpec& arch, const WeightStore& store, const PrunePlan& plan) {
  validate_plan(arch, plan);
  check_binding(arch, store, /*require_conv_weights=*/false);

  std::map<int, ChannelMap> out_maps;
  std::map<int, ChannelMap> in_maps;
  for (int id : arch.topological_order()) {
    const auto& l = arch.layer(id);
    const auto prods = arch.producers(id);
    ChannelMap in;
    if (prods.empty()) {
      in = identity_map(arch.input_shape().channels);
    } else if (l.kind == LayerKind::Concat) {
      std::int64_t offset = 0;
      for (int p : prods) {
        for (auto c : out_maps.at(p)) in.push_back(offset + c);
        offset += arch.output_of(p).channels;
      }
    } else {
      in = out_maps.at(prods.front());
      if (l.kind == LayerKind::Add) {
        for (int p : prods) {
          if (out_maps.at(p).size() != in.size()) {
            fail(ErrorKind::Structural, "residual-add '" + l.name + "' would receive operands with different channel counts");
          }
        }
      }
    }

    ChannelMap out;
    if (l.kind == LayerKind::Conv) {
      auto it = plan.selections.find(id);
      if (it == plan.selections.end()) {
        out = identity_map(l.out_channels);
      } else {
        out.assign(it->second.kept.begin(), it->second.kept.end());
      }
    } else if (l.kind == LayerKind::FullyConnected) {
      out = identity_map(l.out_channels);
    } else {
      out = in;
    }
    in_maps[id] = std::move(in);
    out_maps[id] = std::move(out);
  }

  std::vector<LayerSpec> layers;
  for (const auto& l : arch.layers()) {
    LayerSpec copy = l;
    const auto& in = in_maps.at(l.id);
    if (l.kind == LayerKind::Conv) {
      copy.in_channels = static_cast<std::int64_t>(in.size());
      copy.out_channels = static_cast<std::int64_t>(out_maps.at(l.id).size());
    } else if (l.kind == LayerKind::FullyConnected) {
      const Shape3 s = arch.input_of(l.id);
      copy.in_channels = static_cast<std::int64_t>(in.size()) * s.height * s.width;
    } else {
      copy.in_channels = 0;
      copy.out_channels = 0;
    }
    copy.out_h = copy.out_w = 0;
    layers.push_back(std::move(copy));
  }
  std::vector<Edge> edges(arch.edges().begin(), arch.edges().end());
  ArchSpec pruned = [&] {
    try {
      return ArchSpec::create(arch.name(), arch.input_shape(), std::move(layers), std::move(edges));
    } catch (const Error& e) {
      fail(ErrorKind::Structural, std::string("pruned architecture is invalid: ") + e.what());
    }
  }();

  WeightStore weights;
  for (const auto& [key, tensor] : store) {
    auto [owner, param] = split_key(key);
    const LayerSpec* l = arch.find(owner);
    if (!l) {
      weights.insert(key, tensor);
      continue;
    }
    const auto& in = in_maps.at(l->id);
    const auto& out = out_maps.at(l->id);
    if (l->kind == LayerKind::Conv && param == "weight") {
      weights.insert(key, slice_conv(tensor, out, in));
    } else if (l->kind == LayerKind::Conv && param == "bias") {
      weights.insert(key, slice_vector(tensor, out));
    } else if (l->kind == LayerKind::FullyConnected && param == "weight") {
      const Shape3 s = arch.input_of(l->id);
      const std::int64_t spatial = s.height * s.width;
      ChannelMap columns;
      columns.reserve(in.size() * static_cast<std::size_t>(spatial));
      for (auto c : in) {
        for (std::int64_t k = 0; k < spatial; ++k) columns.push_back(c * spatial + k);
      }
      weights.insert(key, slice_columns(tensor, columns));
    } else if (l->kind == LayerKind::BatchNorm && tensor.rank() == 1) {
      weights.insert(key, slice_vector(tensor, in));
    } else {
      weights.insert(key, tensor);
    }
  }
  check_binding(pruned, weights, /*require_conv_weights=*/false);
  return PruneResult{std::move(pruned), std::move(weights)};
}

ArchSpec pruned_structure(const ArchSpec& arch, const StructurePlan& structure) {
  PrunePlan plan;
  plan.structure = structure;
  for (const auto& lp : structure.layers) {
    SelectionResult sel;
    sel.layer_id = lp.layer_id;
    sel.kept.resize(static_cast<std::size_t>(lp.keep));
    for (std::size_t i = 0; i < sel.kept.size(); ++i) sel.kept[i] = i;
    plan.selections[lp.layer_id] = std::move(sel);
  }
  return apply_plan(arch, WeightStore{}, plan).arch;
}

std::string dump_plan(const PrunePlan& plan) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["structure"] = ordered_json::parse(dump_structure(plan.structure));
  ordered_json selections = ordered_json::object();
  for (const auto& [id, sel] : plan.selections) {
    ordered_json j;
    j["selector"] = to_string(sel.selector);
    j["kept"] = sel.kept;
    j["final_k"] = sel.final_k;
    j["trimmed"] = sel.trimmed;
    if (sel.seed) {
      j["seed"] = *sel.seed;
    } else {
      j["seed"] = nullptr;
    }
    selections[std::to_string(id)] = std::move(j);
  }
  doc["selections"] = std::move(selections);
  doc["provenance"] = {{"lambda", plan.provenance.lambda},
                       {"p", plan.provenance.p},
                       {"selector", to_string(plan.provenance.selector)},
                       {"seed", plan.provenance.seed},
                       {"tool_version", plan.provenance.tool_version}};
  return doc.dump(1) + "\n";
}

PrunePlan parse_plan(std::string_view json_text) {
  using nlohmann::json;
  PrunePlan plan;
  try {
    const json doc = json::parse(json_text);
    const auto& s = doc.at("structure");
    plan.structure.p = s.at("p").get<double>();
    plan.structure.lambda = s.at("lambda").get<double>();
    for (const auto& l : s.at("layers")) {
      plan.structure.layers.push_back(LayerPlan{l.at("layer_id").get<int>(), l.at("name").get<std::string>(),
                                                l.at("filters").get<std::int64_t>(), l.at("sparsity").get<double>(),
                                                l.at("rate").get<double>(), l.at("keep").get<std::int64_t>()});
    }
    for (const auto& [key, j] : doc.at("selections").items()) {
      SelectionResult sel;
      sel.layer_id = std::stoi(key);
      sel.selector = parse_selector(j.at("selector").get<std::string>());
      sel.kept = j.at("kept").get<std::vector<std::size_t>>();
      sel.final_k = j.at("final_k").get<std::size_t>();
      sel.trimmed = j.at("trimmed").get<std::size_t>();
      if (!j.at("seed").is_null()) sel.seed = j.at("seed").get<std::uint64_t>();
      plan.selections[sel.layer_id] = std::move(sel);
    }
    const auto& pv = doc.at("provenance");
    plan.provenance.lambda = pv.at("lambda").get<double>();
    plan.provenance.p = pv.at("p").get<double>();
    plan.provenance.selector = parse_selector(pv.at("selector").get<std::string>());
    plan.provenance.seed = pv.at("seed").get<std::uint64_t>();
    plan.provenance.tool_version = pv.at("tool_version").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("plan JSON: ") + e.what());
  } catch (const std::logic_error& e) {
    fail(ErrorKind::Format, std::string("plan JSON: ") + e.what());
  }
  return plan;
}

PrunePlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open plan file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_plan(buf.str());
}

std::string format_count(std::uint64_t value) {
  const double v = static_cast<double>(value);
  if (v >= 1e9) return fixed(v / 1e9, 2) + "B";
  return fixed(v / 1e6, 2) + "M";
}

double reduction_percent(std::uint64_t before, std::uint64_t after) {
  if (before == 0) return 0.0;
  return (1.0 - static_cast<double>(after) / static_cast<double>(before)) * 100.0;
}

std::string format_with_reduction(std::uint64_t before, std::uint64_t after) {
  // The pruned value is expressed in the unit of the baseline.
  const double scale = static_cast<double>(before) >= 1e9 ? 1e9 : 1e6;
  const char* unit = scale == 1e9 ? "B" : "M";
  return fixed(static_cast<double>(after) / scale, 2) + unit + " (" + fixed(reduction_percent(before, after), 1) + "%)";
}

ReductionReport reduction_report(const ArchSpec& before, const ArchSpec& after, const CountOptions& options) {
  const auto fb = compute_layer_flops(before);
  const auto pb = compute_params(before, options);
  const auto fa = compute_layer_flops(after);
  const auto pa = compute_params(after, options);
  ReductionReport report;
  report.total.layer = "total";
  for (const auto& l : before.layers()) {
    ReductionRow row{l.name, fb.at(l.id), 0, pb.at(l.id), 0};
    if (const auto* a = after.find(l.name)) {
      row.flops_after = fa.at(a->id);
      row.params_after = pa.at(a->id);
    }
    report.total.flops_before += row.flops_before;
    report.total.flops_after += row.flops_after;
    report.total.params_before += row.params_before;
    report.total.params_after += row.params_after;
    if (row.flops_before || row.params_before) report.layers.push_back(std::move(row));
  }
  return report;
}

std::string reduction_csv(const ReductionReport& report) {
  std::ostringstream os;
  os << "layer,flops_before,flops_after,flops_pr,params_before,params_after,params_pr\n";
  auto emit = [&](const ReductionRow& r) {
    os << r.layer << ',' << r.flops_before << ',' << r.flops_after << ','
       << fixed(reduction_percent(r.flops_before, r.flops_after), 4) << ',' << r.params_before << ','
       << r.params_after << ',' << fixed(reduction_percent(r.params_before, r.params_after), 4) << '\n';
  };
  for (const auto& r : report.layers) emit(r);
  emit(report.total);
  return os.str();
}

std::string reduction_json(const ReductionReport& report) {
  using nlohmann::ordered_json;
  auto row_json = [](const ReductionRow& r) {
    return ordered_json{{"layer", r.layer},
                        {"flops_before", r.flops_before},
                        {"flops_after", r.flops_after},
                        {"params_before", r.params_before},
                        {"params_after", r.params_after},
                        {"flops", format_with_reduction(r.flops_before, r.flops_after)},
                        {"params", format_with_reduction(r.params_before, r.params_after)}};
  };
  ordered_json doc;
  doc["total"] = row_json(report.total);
  auto layers = ordered_json::array();
  for (const auto& r : report.layers) layers.push_back(row_json(r));
  doc["layers"] = std::move(layers);
  return doc.dump(1) + "\n";
}

LongtailReport longtail_report(const ArchSpec& arch, const WeightStore& store, const std::vector<double>& edges,
                               double p, double lambda) {
  if (store.empty()) fail(ErrorKind::Usage, "long-tail report needs a nonempty weight store");
  if (edges.size() < 2) fail(ErrorKind::Usage, "bins need at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) fail(ErrorKind::Usage, "bin edges must be strictly increasing");
  }
  check_binding(arch, store, /*require_conv_weights=*/true);
  const auto costs = conv_costs(arch);
  const auto magnitude = per_layer_rates(global_prune_mask(weight_importance(store, costs, 0.0), p));
  const auto aware = per_layer_rates(global_prune_mask(weight_importance(store, costs, lambda), p));

  LongtailReport report;
  report.edges = edges;
  const std::size_t bins = edges.size() - 1;
  for (const auto& l : arch.layers()) {
    if (l.kind != LayerKind::Conv) continue;
    const auto& w = store.at(weight_key(l.name));
    LongtailLayer row;
    row.layer_id = l.id;
    row.name = l.name;
    row.flops = costs.at(l.name).flops;
    row.weights = w.data.size();
    std::vector<std::size_t> counts(bins, 0);
    for (float v : w.data) {
      const double a = std::fabs(static_cast<double>(v));
      auto pos = std::upper_bound(edges.begin(), edges.end(), a) - edges.begin() - 1;
      pos = std::clamp<std::ptrdiff_t>(pos, 0, static_cast<std::ptrdiff_t>(bins) - 1);
      ++counts[static_cast<std::size_t>(pos)];
    }
    for (auto c : counts) {
      row.fractions.push_back(row.weights ? static_cast<double>(c) / static_cast<double>(row.weights) : 0.0);
    }
    if (auto it = magnitude.find(l.id); it != magnitude.end()) row.rate_magnitude = it->second;
    if (auto it = aware.find(l.id); it != aware.end()) row.rate_lambda = it->second;
    report.layers.push_back(std::move(row));
  }
  return report;
}

std::string longtail_histogram_csv(const LongtailReport& report) {
  std::ostringstream os;
  os << "layer_id,layer,bin_lo,bin_hi,fraction\n";
  for (const auto& l : report.layers) {
    for (std::size_t b = 0; b < l.fractions.size(); ++b) {
      os << l.layer_id << ',' << l.name << ',' << general(report.edges[b]) << ',' << general(report.edges[b + 1])
         << ',' << general(l.fractions[b]) << '\n';
    }
  }
  return os.str();
}

std::string longtail_rates_csv(const LongtailReport& report) {
  std::ostringstream os;
  os << "layer_id,layer,flops,weights,rate_lambda0,rate_lambda\n";
  for (const auto& l : report.layers) {
    os << l.layer_id << ',' << l.name << ',' << l.flops << ',' << l.weights << ',' << general(l.rate_magnitude)
       << ',' << general(l.rate_lambda) << '\n';
  }
  return os.str();
}

double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::set<std::size_t> sa(a.begin(), a.end());
  std::set<std::size_t> sb(b.begin(), b.end());
  std::size_t common = 0;
  for (auto x : sa) common += sb.count(x);
  const std::size_t uni = sa.size() + sb.size() - common;
  return uni == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(uni);
}

}  // namespace clrprune

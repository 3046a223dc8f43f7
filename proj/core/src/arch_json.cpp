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

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clrprune/arch.hpp"
#include "clrprune/error.hpp"

namespace clrprune {

namespace {

using nlohmann::json;

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorKind::Format, where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::Format, where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T optional_field(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return require<T>(obj, key, where);
}

LayerSpec parse_layer(const json& j, std::size_t position) {
  const std::string where = "layers[" + std::to_string(position) + "]";
  if (!j.is_object()) fail(ErrorKind::Format, where + " is not an object");
  LayerSpec l;
  l.id = require<int>(j, "id", where);
  l.name = require<std::string>(j, "name", where);
  l.kind = parse_layer_kind(require<std::string>(j, "kind", where));
  l.out_channels = optional_field<std::int64_t>(j, "out_channels", 0, where);
  l.in_channels = optional_field<std::int64_t>(j, "in_channels", 0, where);
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    if (k.is_number_integer()) {
      l.kernel_h = l.kernel_w = k.get<std::int64_t>();
    } else if (k.is_array() && k.size() == 2 && k[0].is_number_integer() && k[1].is_number_integer()) {
      l.kernel_h = k[0].get<std::int64_t>();
      l.kernel_w = k[1].get<std::int64_t>();
    } else {
      fail(ErrorKind::Format, where + ": kernel must be an integer or [h, w]");
    }
  } else if (l.kind == LayerKind::Conv || l.kind == LayerKind::Pool) {
    fail(ErrorKind::Format, where + ": missing field 'kernel'");
  }
  l.stride = optional_field<std::int64_t>(j, "stride", 1, where);
  l.padding = optional_field<std::int64_t>(j, "padding", 0, where);
  l.bias = optional_field<bool>(j, "bias", false, where);
  return l;
}

std::vector<LayerGroup> normalized(std::vector<LayerGroup> groups) {
  for (auto& g : groups) std::sort(g.begin(), g.end());
  std::sort(groups.begin(), groups.end());
  return groups;
}

}  // namespace

ArchSpec parse_arch(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Format, std::string("architecture JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::Format, "architecture JSON must be an object");

  const std::string name = require<std::string>(doc, "name", "architecture");
  const auto input = require<std::vector<std::int64_t>>(doc, "input_shape", "architecture");
  if (input.size() != 3) fail(ErrorKind::Format, "input_shape must be [channels, height, width]");

  const auto& layers_json = doc.contains("layers") ? doc.at("layers") : json();
  if (!layers_json.is_array()) fail(ErrorKind::Format, "architecture: 'layers' must be an array");
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < layers_json.size(); ++i) layers.push_back(parse_layer(layers_json[i], i));

  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    const auto& edges_json = doc.at("edges");
    if (!edges_json.is_array()) fail(ErrorKind::Format, "architecture: 'edges' must be an array");
    for (std::size_t i = 0; i < edges_json.size(); ++i) {
      const std::string where = "edges[" + std::to_string(i) + "]";
      const auto& e = edges_json[i];
      if (!e.is_object()) fail(ErrorKind::Format, where + " is not an object");
      edges.push_back({require<int>(e, "from", where), require<int>(e, "to", where),
                       parse_edge_kind(optional_field<std::string>(e, "kind", "sequential", where))});
    }
  }

  ArchSpec arch = ArchSpec::create(name, Shape3{input[0], input[1], input[2]}, std::move(layers),
                                   std::move(edges));

  if (doc.contains("coupling_groups")) {
    auto declared = require<std::vector<LayerGroup>>(doc, "coupling_groups", "architecture");
    if (normalized(declared) != normalized(arch.coupling_groups())) {
      fail(ErrorKind::Structural,
           "declared coupling_groups disagree with the residual-add structure of the graph");
    }
  }
  return arch;
}

ArchSpec load_arch(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open architecture file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_arch(buf.str());
}

std::string dump_arch(const ArchSpec& arch) {
  json doc;
  doc["name"] = arch.name();
  const auto& s = arch.input_shape();
  doc["input_shape"] = {s.channels, s.height, s.width};
  json layers = json::array();
  for (const auto& l : arch.layers()) {
    json j;
    j["id"] = l.id;
    j["name"] = l.name;
    j["kind"] = to_string(l.kind);
    j["in_channels"] = l.in_channels;
    j["out_channels"] = l.out_channels;
    if (l.kind == LayerKind::Conv || l.kind == LayerKind::Pool) {
      j["kernel"] = {l.kernel_h, l.kernel_w};
      j["stride"] = l.stride;
      j["padding"] = l.padding;
    }
    if (l.kind == LayerKind::Conv || l.kind == LayerKind::FullyConnected) j["bias"] = l.bias;
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  json edges = json::array();
  for (const auto& e : arch.edges()) {
    edges.push_back({{"from", e.from}, {"to", e.to}, {"kind", to_string(e.kind)}});
  }
  doc["edges"] = std::move(edges);
  doc["coupling_groups"] = arch.coupling_groups();
  return doc.dump(1) + "\n";
}

void save_arch(const ArchSpec& arch, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write architecture file '" + path + "'");
  out << dump_arch(arch);
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace clrprune

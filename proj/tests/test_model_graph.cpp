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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "clrprune/arch.hpp"
#include "clrprune/counting.hpp"
#include "clrprune/error.hpp"
#include "support.hpp"

using namespace clrprune;
using namespace clrprune::testing;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Usage;
}

}  // namespace

TEST_CASE("conv output shape follows floor((H + 2p - k) / s) + 1") {
  auto arch = ArchSpec::create("s", {3, 32, 32}, {conv(0, "a", 3, 8, 3, 2, 1), conv(1, "b", 8, 8, 5, 1, 0)},
                               {seq(0, 1)});
  CHECK(arch.layer(0).out_h == 16);
  CHECK(arch.layer(0).out_w == 16);
  CHECK(arch.layer(1).out_h == 12);
  CHECK(arch.output_of(1) == Shape3{8, 12, 12});
}

TEST_CASE("conv FLOPs: 3->64, 3x3, 32x32 output") {
  // 64 * 3 * 3 * 3 * 32 * 32
  auto arch = ArchSpec::create("c", {3, 32, 32}, {conv(0, "c", 3, 64)}, {});
  CHECK(compute_layer_flops(arch).at(0) == 1'769'472);
}

TEST_CASE("unit conv has one FLOP and one parameter") {
  auto arch = ArchSpec::create("u", {1, 1, 1}, {conv(0, "c", 1, 1, 1, 1, 0)}, {});
  CHECK(compute_layer_flops(arch).at(0) == 1);
  CHECK(compute_params(arch).at(0) == 1);
}

TEST_CASE("parameter counting options") {
  auto arch = ArchSpec::create("p", {2, 4, 4},
                               {conv(0, "c", 2, 3, 3, 1, 1, true), simple(1, "bn", LayerKind::BatchNorm),
                                simple(2, "relu", LayerKind::Activation), pool(3, "pool", 4, 4), fc(4, "fc", 3, 2)},
                               {seq(0, 1), seq(1, 2), seq(2, 3), seq(3, 4)});
  auto p = compute_params(arch);
  CHECK(p.at(0) == 3 * 2 * 9 + 3);
  CHECK(p.at(1) == 6);
  CHECK(p.at(2) == 0);
  CHECK(p.at(3) == 0);
  CHECK(p.at(4) == 3 * 2 + 2);
  auto bare = compute_params(arch, CountOptions{false, true});
  CHECK(bare.at(0) == 3 * 2 * 9);
  CHECK(bare.at(1) == 12);
  CHECK(bare.at(4) == 6);

  auto f = compute_layer_flops(arch);
  CHECK(f.at(1) == 0);
  CHECK(f.at(3) == 0);
  CHECK(f.at(4) == 6);
  CHECK(total(f) == f.at(0) + f.at(4));
}

TEST_CASE("bundled baselines land within 1% of the reference totals") {
  struct Case {
    const char* file;
    double flops;
    double params;
  };
  for (const Case& c : {Case{"archs/vgg16_cifar10.json", 314.04e6, 14.73e6},
                        Case{"archs/resnet56_cifar10.json", 126.56e6, 0.85e6},
                        Case{"archs/resnet110_cifar10.json", 254.99e6, 1.73e6},
                        Case{"archs/resnet50_imagenet.json", 4.11e9, 25.56e6},
                        Case{"archs/googlenet_cifar10.json", 1.53e9, 6.17e6}}) {
    CAPTURE(c.file);
    auto arch = load_arch(data_path(c.file));
    const double f = static_cast<double>(total(compute_layer_flops(arch)));
    const double p = static_cast<double>(total(compute_params(arch)));
    CHECK(std::fabs(f / c.flops - 1.0) <= 0.01);
    CHECK(std::fabs(p / c.params - 1.0) <= 0.01);
  }
}

TEST_CASE("coupling groups") {
  SUBCASE("shortcut-free VGG has none") {
    auto arch = load_arch(data_path("archs/vgg16_cifar10.json"));
    CHECK(coupling_groups(arch).empty());
    CHECK(arch.prunable_layers().size() == 13);
  }
  SUBCASE("ResNet-56 has one group of ten per stage") {
    auto arch = load_arch(data_path("archs/resnet56_cifar10.json"));
    auto groups = coupling_groups(arch);
    REQUIRE(groups.size() == 3);
    for (const auto& g : groups) CHECK(g.size() == 10);
    // Stage one: the stem conv plus every block's second conv.
    std::vector<std::string> names;
    for (int id : groups[0]) names.push_back(arch.layer(id).name);
    CHECK(std::count(names.begin(), names.end(), "conv1") == 1);
    for (int b = 0; b < 9; ++b) {
      CHECK(std::count(names.begin(), names.end(), "layer1." + std::to_string(b) + ".conv2") == 1);
    }
    // Groups are disjoint.
    std::set<int> seen;
    for (const auto& g : groups) {
      for (int id : g) CHECK(seen.insert(id).second);
    }
  }
  SUBCASE("toy residual block couples stem and block output") {
    auto arch = toy_residual_net();
    auto groups = coupling_groups(arch);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0] == LayerGroup{0, 6});
    CHECK(arch.prunable_layers() == std::vector<int>{0, 3, 6});
  }
  SUBCASE("residual operand from the network input pins the chain") {
    auto arch = ArchSpec::create("pinned", {4, 4, 4},
                                 {conv(0, "c", 4, 4), simple(1, "add", LayerKind::Add), pool(2, "pool", 4, 4),
                                  fc(3, "fc", 4, 2), simple(4, "relu", LayerKind::Activation)},
                                 {seq(4, 0), Edge{0, 1, EdgeKind::ResidualAdd}, Edge{4, 1, EdgeKind::ResidualAdd},
                                  seq(1, 2), seq(2, 3)});
    CHECK(coupling_groups(arch) == std::vector<LayerGroup>{{0}});
    CHECK(arch.prunable_layers().empty());
  }
  SUBCASE("a conv feeding the network output is not prunable") {
    auto arch = ArchSpec::create("sink", {3, 4, 4}, {conv(0, "a", 3, 4), conv(1, "b", 4, 2)}, {seq(0, 1)});
    CHECK(arch.prunable_layers() == std::vector<int>{0});
  }
}

TEST_CASE("GoogLeNet concat shapes resolve") {
  auto arch = load_arch(data_path("archs/googlenet_cifar10.json"));
  const auto* cat = arch.find("b5.concat");
  REQUIRE(cat != nullptr);
  CHECK(arch.output_of(cat->id).channels == 1024);
  CHECK(coupling_groups(arch).empty());
}

TEST_CASE("shape inference is deterministic and round-trips through JSON") {
  auto a = load_arch(data_path("archs/resnet56_cifar10.json"));
  auto b = load_arch(data_path("archs/resnet56_cifar10.json"));
  CHECK(a == b);
  for (const auto& l : a.layers()) CHECK(a.output_of(l.id) == b.output_of(l.id));
  auto c = parse_arch(dump_arch(a));
  CHECK(c == a);
  CHECK(dump_arch(c) == dump_arch(a));
}

TEST_CASE("invalid architectures are rejected") {
  CHECK(kind_of([] { ArchSpec::create("empty", {3, 4, 4}, {}, {}); }) == ErrorKind::Structural);
  CHECK(kind_of([] { ArchSpec::create("chan", {3, 4, 4}, {conv(0, "a", 3, 4), conv(1, "b", 5, 2)}, {seq(0, 1)}); }) ==
        ErrorKind::Shape);
  CHECK(kind_of([] { ArchSpec::create("cycle", {3, 4, 4}, {conv(0, "a", 3, 3), conv(1, "b", 3, 3)},
                                      {seq(0, 1), seq(1, 0)}); }) == ErrorKind::Structural);
  CHECK(kind_of([] { ArchSpec::create("kernel", {3, 2, 2}, {conv(0, "a", 3, 4, 5, 1, 0)}, {}); }) == ErrorKind::Shape);
  CHECK(kind_of([] { ArchSpec::create("dup", {3, 4, 4}, {conv(0, "a", 3, 4), conv(0, "b", 4, 4)}, {}); }) ==
        ErrorKind::Structural);
  CHECK(kind_of([] {
          ArchSpec::create("fc", {3, 4, 4}, {conv(0, "a", 3, 4), fc(1, "fc", 4, 2)}, {seq(0, 1)});
        }) == ErrorKind::Shape);
  CHECK(kind_of([] {
          ArchSpec::create("add", {3, 4, 4}, {conv(0, "a", 3, 4), conv(1, "b", 3, 5), simple(2, "add", LayerKind::Add)},
                           {Edge{0, 2, EdgeKind::ResidualAdd}, Edge{1, 2, EdgeKind::ResidualAdd}});
        }) == ErrorKind::Shape);
  CHECK(kind_of([] {
          ArchSpec::create("kind", {3, 4, 4}, {conv(0, "a", 3, 4), conv(1, "b", 4, 4)},
                           {Edge{0, 1, EdgeKind::Concat}});
        }) == ErrorKind::Structural);
  CHECK(kind_of([] { parse_arch(R"({"name":"x","input_shape":[3,4,4],"layers":[]})"); }) == ErrorKind::Structural);
  CHECK(kind_of([] { parse_arch("{not json"); }) == ErrorKind::Format);
  CHECK(kind_of([] { parse_arch(R"({"name":"x","input_shape":[3,4,4],"layers":[{"id":0,"kind":"conv"}]})"); }) ==
        ErrorKind::Format);
}

TEST_CASE("declared coupling groups must match the graph") {
  auto doc = nlohmann::json::parse(dump_arch(toy_residual_net()));
  CHECK_NOTHROW(parse_arch(doc.dump()));
  doc["coupling_groups"] = {{0, 3}};
  CHECK(kind_of([&] { parse_arch(doc.dump()); }) == ErrorKind::Structural);
  doc.erase("coupling_groups");
  CHECK_NOTHROW(parse_arch(doc.dump()));
}

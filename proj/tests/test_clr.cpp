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

#include <cmath>

#include "clrprune/error.hpp"
#include "clrprune/ranking.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace clrprune;
using namespace clrprune::testing;

namespace {

WeightStore one_weight_layers(std::vector<std::pair<std::string, std::vector<float>>> layers) {
  WeightStore s;
  for (auto& [name, values] : layers) {
    const auto n = static_cast<std::uint32_t>(values.size());
    s.insert(weight_key(name), Tensor{{n, 1, 1, 1}, std::move(values)});
  }
  return s;
}

ImportanceScores single_layer(std::vector<double> scores) {
  return ImportanceScores{{LayerScores{0, "l", std::move(scores)}}};
}

std::vector<std::vector<bool>> keeps(const SparsityMask& m) {
  std::vector<std::vector<bool>> out;
  for (const auto& l : m.layers) out.push_back(l.keep);
  return out;
}

}  // namespace

TEST_CASE("importance divides magnitude by flops^lambda") {
  auto store = one_weight_layers({{"a", {-0.5f}}});
  CostTable costs{{"a", {0, 100}}};
  auto s = weight_importance(store, costs, 0.5);
  REQUIRE(s.layers.size() == 1);
  CHECK(s.layers[0].scores[0] == doctest::Approx(0.05).epsilon(1e-7));
}

TEST_CASE("lambda = 0 gives plain magnitude") {
  Rng rng(11);
  WeightStore store;
  store.insert("a.weight", random_tensor({3, 2, 3, 3}, rng, 1.0));
  CostTable costs{{"a", {0, 12345}}};
  auto s = weight_importance(store, costs, 0.0);
  const auto& t = store.at("a.weight");
  for (std::size_t q = 0; q < t.data.size(); ++q) {
    CHECK(s.layers[0].scores[q] == static_cast<double>(std::fabs(t.data[q])));
  }
}

TEST_CASE("higher-cost layers score lower at lambda = 1") {
  auto store = one_weight_layers({{"cheap", {0.3f}}, {"costly", {0.3f}}});
  CostTable costs{{"cheap", {0, 10}}, {"costly", {1, 1000}}};
  auto s = weight_importance(store, costs, 1.0);
  REQUIRE(s.layers.size() == 2);
  CHECK(s.layers[0].layer_id == 0);
  CHECK(s.layers[0].scores[0] == doctest::Approx(0.03).epsilon(1e-7));
  CHECK(s.layers[1].scores[0] == doctest::Approx(0.0003).epsilon(1e-7));
  auto mask = global_prune_mask(s, 0.5);
  CHECK(mask.layers[0].keep[0]);
  CHECK_FALSE(mask.layers[1].keep[0]);
}

TEST_CASE("importance errors") {
  auto store = one_weight_layers({{"a", {1.0f}}});
  try {
    weight_importance(store, CostTable{}, 1.0);
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  CostTable costs{{"a", {0, 10}}};
  CHECK_THROWS_AS(weight_importance(store, costs, -1.0), Error);
}

TEST_CASE("zeroed count rounds halves away from zero") {
  CHECK(zeroed_count(0.5, 6) == 3);
  CHECK(zeroed_count(0.25, 2) == 1);  // 0.5 -> 1
  CHECK(zeroed_count(0.125, 4) == 1);
  CHECK(zeroed_count(0.0, 100) == 0);
  CHECK(zeroed_count(0.86, 1000) == 860);
}

TEST_CASE("global mask zeroes the lowest scores") {
  auto m = global_prune_mask(single_layer({5, 4, 3, 2, 1, 0.5}), 0.5);
  CHECK(m.layers[0].keep == std::vector<bool>{true, true, true, false, false, false});
  CHECK(m.zeroed() == 3);

  auto id = global_prune_mask(single_layer({5, 4, 3}), 0.0);
  CHECK(id.layers[0].keep == std::vector<bool>{true, true, true});
  CHECK(per_layer_rates(id).at(0) == 0.0);

  CHECK_THROWS_AS(global_prune_mask(single_layer({1, 2}), 1.0), Error);
  CHECK_THROWS_AS(global_prune_mask(single_layer({1, 2}), -0.1), Error);
}

TEST_CASE("ties at the threshold go to the lower layer and index") {
  ImportanceScores s{{LayerScores{0, "a", {1, 1, 2}}, LayerScores{1, "b", {1, 0.5}}}};
  auto m = global_prune_mask(s, 0.4);  // two zeroed: 0.5, then the first 1
  CHECK(m.layers[0].keep == std::vector<bool>{false, true, true});
  CHECK(m.layers[1].keep == std::vector<bool>{true, false});
}

TEST_CASE("global mask matches the sort-and-cut oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> raw(3);
    ImportanceScores s;
    for (int l = 0; l < 3; ++l) {
      const auto n = 5 + rng.below(40);
      for (std::uint64_t q = 0; q < n; ++q) raw[l].push_back(static_cast<double>(rng.below(20)) * 0.25);
      s.layers.push_back(LayerScores{l, "l" + std::to_string(l), raw[l]});
    }
    for (double p : {0.0, 0.25, 0.5, 0.86}) {
      auto m = global_prune_mask(s, p);
      CHECK(keeps(m) == oracle::sort_and_cut(raw, zeroed_count(p, s.total())));
    }
  }
}

TEST_CASE("per-layer rates") {
  SparsityMask m{{LayerMask{3, "a", {true, false, true, true}}, LayerMask{5, "empty", {}}}};
  auto r = per_layer_rates(m);
  CHECK(r.size() == 1);
  CHECK(r.at(3) == 0.25);

  Rng rng(4);
  ImportanceScores s;
  for (int l = 0; l < 4; ++l) {
    std::vector<double> v(10 + 7 * static_cast<std::size_t>(l));
    for (auto& x : v) x = rng.uniform();
    s.layers.push_back(LayerScores{l, "l", v});
  }
  const double p = 0.37;
  auto mask = global_prune_mask(s, p);
  auto rates = per_layer_rates(mask);
  double weighted = 0.0;
  for (const auto& l : mask.layers) weighted += rates.at(l.layer_id) * static_cast<double>(l.keep.size());
  CHECK(weighted / static_cast<double>(s.total()) ==
        doctest::Approx(static_cast<double>(zeroed_count(p, s.total())) / static_cast<double>(s.total())));
}

TEST_CASE("preserved filter count") {
  CHECK(preserved_count(0.4, 5) == 3);
  CHECK(preserved_count(0.99, 10) == 1);
  CHECK(preserved_count(0.0, 10) == 10);
  CHECK(preserved_count(1.0, 10) == 1);
  CHECK(preserved_count(0.25, 2) == 2);  // 1.5 rounds to 2
}

TEST_CASE("coupled layers share the mean rate") {
  auto arch = toy_residual_net(10);
  auto plan = resolve_structure({{0, 0.2}, {3, 0.0}, {6, 0.6}}, arch, coupling_groups(arch));
  REQUIRE(plan.layers.size() == 3);
  CHECK(plan.find(0)->rate == doctest::Approx(0.4));
  CHECK(plan.find(6)->rate == doctest::Approx(0.4));
  CHECK(plan.find(0)->keep == 6);
  CHECK(plan.find(6)->keep == 6);
  CHECK(plan.find(0)->sparsity == 0.2);
  CHECK(plan.find(3)->keep == 10);

  try {
    resolve_structure({{0, 0.2}, {3, 0.0}}, arch, coupling_groups(arch));
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("planning at p = 0 keeps every filter") {
  auto arch = load_arch(data_path("archs/resnet56_cifar10.json"));
  auto plan = plan_structure(arch, synthesize_weights(arch, 1), 0.0, 1.0);
  CHECK(plan.layers.size() == arch.prunable_layers().size());
  for (const auto& l : plan.layers) {
    CHECK(l.rate == 0.0);
    CHECK(l.keep == l.filters);
  }
}

TEST_CASE("raising lambda shifts pruning from the costly bottom to the cheap top") {
  auto arch = longtail_net();
  auto store = longtail_weights(9);
  auto rate = [&](double lambda, const char* name) {
    return plan_structure(arch, store, 0.5, lambda).find(arch.find(name)->id)->sparsity;
  };
  // Small top weights are pruned almost exclusively by magnitude alone.
  CHECK(rate(0.0, "top1") > rate(0.0, "bottom2"));
  CHECK(rate(1.0, "top1") < rate(0.0, "top1"));
  CHECK(rate(1.0, "bottom2") > rate(0.0, "bottom2"));
  double prev = 2.0;
  for (double lambda : {0.0, 0.25, 0.5, 1.0, 2.0}) {
    const double r = rate(lambda, "top2");
    CHECK(r <= prev);
    prev = r;
  }
}

TEST_CASE("structure JSON is deterministic") {
  auto arch = toy_residual_net();
  auto store = synthesize_weights(arch, 2);
  CHECK(dump_structure(plan_structure(arch, store, 0.3, 0.5)) == dump_structure(plan_structure(arch, store, 0.3, 0.5)));
}

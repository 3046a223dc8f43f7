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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clrprune/weights.hpp"

namespace clrprune {

/// Row-normalized closeness between the filters of one layer:
/// S[j][h] = exp(-D^2(j,h)) / sum_g exp(-D^2(j,g)), D the Euclidean distance.
///
/// Entries underflow to zero once D^2 exceeds roughly 745, although the exact
/// values stay distinct. Within a row S is strictly decreasing in D^2, so
/// `sq_distances`, when present, is what rank comparisons read.
struct SimilarityMatrix {
  int layer_id = -1;
  std::size_t size = 0;
  std::vector<double> values;        // row-major size x size
  std::vector<double> sq_distances;  // row-major D^2, or empty

  double operator()(std::size_t j, std::size_t h) const { return values[j * size + h]; }

  /// True when h is strictly closer to j than g is.
  bool closer(std::size_t j, std::size_t h, std::size_t g) const {
    return sq_distances.empty() ? values[j * size + h] > values[j * size + g]
                                : sq_distances[j * size + h] < sq_distances[j * size + g];
  }
};

SimilarityMatrix similarity_matrix(const FilterMatrix& filters, int layer_id = -1);

/// 1 + #{g : S[j][g] > S[j][h]}. Ties share the smaller rank.
std::size_t closeness_rank(const SimilarityMatrix& s, std::size_t j, std::size_t h);

/// {h : rank of h seen from j <= k}, ascending. Can exceed k under ties.
std::vector<std::size_t> knn_set(const SimilarityMatrix& s, std::size_t j, std::size_t k);

/// Filters lying in the k-NN set of every filter, ascending.
std::vector<std::size_t> reciprocal_intersection(const SimilarityMatrix& s, std::size_t k);

enum class Selector { Rnf, L1, Random, KMeans };

const char* to_string(Selector selector);
Selector parse_selector(std::string_view text);

struct SelectionResult {
  int layer_id = -1;
  Selector selector = Selector::Rnf;
  std::vector<std::size_t> kept;  // strictly increasing
  std::size_t final_k = 0;        // RNF only
  std::size_t trimmed = 0;        // RNF overshoot removed by the column-sum trim
  std::optional<std::uint64_t> seed;
};

/// k-reciprocal nearest filters. Starts at k = target and grows k by one
/// until the intersection holds at least `target` filters; any overshoot is
/// trimmed by descending column sum of S, lower index first on ties.
SelectionResult rnf_select(const FilterMatrix& filters, std::size_t target, int layer_id = -1);

/// Largest l1 norms, lower index first on ties.
SelectionResult l1_select(const FilterMatrix& filters, std::size_t target, int layer_id = -1);

/// Uniform sample without replacement: partial Fisher-Yates over the
/// identity permutation driven by Rng(seed).
SelectionResult random_select(const FilterMatrix& filters, std::size_t target, std::uint64_t seed,
                              int layer_id = -1);

struct KMeansOutcome {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;
  std::vector<double> inertia;  // after each assignment step
  std::size_t iterations = 0;
};

inline constexpr std::size_t kKMeansMaxIterations = 100;
inline constexpr double kKMeansTolerance = 1e-6;

/// Lloyd's algorithm with k-means++ seeding from Rng(seed).
KMeansOutcome kmeans(const FilterMatrix& filters, std::size_t clusters, std::uint64_t seed);

/// One filter per k-means cluster: the nearest not already taken.
SelectionResult kmeans_select(const FilterMatrix& filters, std::size_t target, std::uint64_t seed,
                              int layer_id = -1);

SelectionResult select_filters(Selector selector, const FilterMatrix& filters, std::size_t target,
                               std::uint64_t seed, int layer_id = -1);

}  // namespace clrprune

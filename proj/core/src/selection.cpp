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

#include "clrprune/selection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include "clrprune/error.hpp"
#include "clrprune/rng.hpp"

namespace clrprune {

namespace {

void check_target(const FilterMatrix& filters, std::size_t target) {
  if (filters.rows == 0) fail(ErrorKind::Usage, "cannot select from an empty filter bank");
  if (target < 1 || target > filters.rows) {
    fail(ErrorKind::Usage, "target filter count " + std::to_string(target) + " outside [1, " +
                               std::to_string(filters.rows) + "]");
  }
}

// Four independent partial sums let the loop vectorize without relying on
// reassociation; the summation order is still fixed.
double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double d = a[i + l] - b[i + l];
      acc[l] += d * d;
    }
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    acc[0] += d * d;
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

// Signed quantity sign * exp(log_mag), so that products of tiny
// exponentials neither underflow nor lose relative precision.
struct LogValue {
  int sign = 0;  // -1, 0 or +1
  double log_mag = -std::numeric_limits<double>::infinity();

  friend bool operator<(const LogValue& a, const LogValue& b) {
    if (a.sign != b.sign) return a.sign < b.sign;
    if (a.sign == 0) return false;
    return a.sign > 0 ? a.log_mag < b.log_mag : a.log_mag > b.log_mag;
  }
};

// log(1 - exp(x)) for x < 0.
double log1mexp(double x) { return x > -std::numbers::ln2 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x)); }

// log(sum exp(logs)). Inputs are sorted first so equal multisets give
// bitwise-equal results.
double log_sum_exp(std::vector<double> logs) {
  if (logs.empty()) return -std::numeric_limits<double>::infinity();
  std::sort(logs.begin(), logs.end());
  const double top = logs.back();
  if (std::isinf(top)) return top;
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - top);
  return top + std::log(acc);
}

// exp(a) - exp(b).
LogValue log_difference(double a, double b) {
  if (a == b) return {};
  if (a > b) return {+1, a + log1mexp(b - a)};
  return {-1, b + log1mexp(a - b)};
}

// log(exp(a) + exp(b)).
double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (std::isinf(b)) return a;
  return a + std::log1p(std::exp(b - a));
}

// Column sums of S minus one, one per filter.
//
// With R_x(y) = sum_{g != x, y} exp(-D^2(x,g)) and Z_x the row-x softmax
// denominator, rows summing to one give
//   sum_j S[j][h] - 1 = sum_{j != h} exp(-D^2(j,h)) (R_h(j) - R_j(h)) / (Z_j Z_h).
// Evaluating the right-hand side keeps the near-unit diagonal and the shared
// exp(-D^2(h,j)) term out of every subtraction; otherwise they round away
// column differences far below double epsilon. Everything stays in the log
// domain so large distances cannot underflow.
//
// R_x(y) is read off prefix and suffix sums of row x sorted by distance, with
// y removed at the first occurrence of its distance. Rows holding the same
// multiset of distances therefore give bitwise-equal sums, and columns that
// tie exactly (duplicate or mirror-image filters) compare equal.
std::vector<LogValue> column_excess(const SimilarityMatrix& s) {
  const std::size_t n = s.size;
  const double none = -std::numeric_limits<double>::infinity();
  const auto d2 = [&](std::size_t a, std::size_t b) { return s.sq_distances[a * n + b]; };

  std::vector<double> rest(n * n, none), log_z(n);  // rest[x * n + y] = log R_x(y)
  std::vector<double> sorted(n), prefix(n), suffix(n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t g = 0; g < n; ++g) sorted[g] = d2(x, g);
    // Descending distance; the self entry (zero) lands last and is dropped.
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t m = n - 1;
    prefix[0] = none;
    for (std::size_t i = 0; i < m; ++i) prefix[i + 1] = log_add(prefix[i], -sorted[i]);
    suffix[m] = none;
    for (std::size_t i = m; i-- > 0;) suffix[i] = log_add(suffix[i + 1], -sorted[i]);
    log_z[x] = std::log1p(std::exp(prefix[m]));
    for (std::size_t y = 0; y < n; ++y) {
      if (y == x) continue;
      const auto pos = static_cast<std::size_t>(
          std::lower_bound(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(m), d2(x, y),
                           std::greater<>()) -
          sorted.begin());
      rest[x * n + y] = log_add(prefix[pos], suffix[pos + 1]);
    }
  }

  std::vector<LogValue> out(n);
  for (std::size_t h = 0; h < n; ++h) {
    std::vector<double> pos, neg;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == h) continue;
      const auto diff = log_difference(rest[h * n + j], rest[j * n + h]);
      if (diff.sign == 0) continue;
      const double l = -d2(j, h) + diff.log_mag - log_z[j] - log_z[h];
      (diff.sign > 0 ? pos : neg).push_back(l);
    }
    out[h] = log_difference(log_sum_exp(std::move(pos)), log_sum_exp(std::move(neg)));
  }
  return out;
}

std::size_t nearest(std::span<const double> point, const std::vector<std::vector<double>>& centroids,
                    double* distance = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(point, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (distance) *distance = best_d;
  return best;
}

}  // namespace

SimilarityMatrix similarity_matrix(const FilterMatrix& filters, int layer_id) {
  const std::size_t n = filters.rows;
  if (n < 1 || filters.cols < 1) fail(ErrorKind::Usage, "similarity_matrix needs at least one filter and one weight");
  for (double v : filters.values) {
    if (!std::isfinite(v)) fail(ErrorKind::Data, "filter bank contains a non-finite value");
  }

  std::vector<double> dist2(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t h = j + 1; h < n; ++h) {
      const double d = squared_distance(filters.row(j), filters.row(h));
      dist2[j * n + h] = d;
      dist2[h * n + j] = d;
    }
  }

  // No row shift is needed: the self-distance is zero, so every row's
  // denominator is at least one.
  SimilarityMatrix s{layer_id, n, std::vector<double>(n * n), {}};
  for (std::size_t j = 0; j < n; ++j) {
    const double* row = dist2.data() + j * n;
    double sum = 0.0;
    for (std::size_t h = 0; h < n; ++h) {
      const double e = std::exp(-row[h]);
      s.values[j * n + h] = e;
      sum += e;
    }
    for (std::size_t h = 0; h < n; ++h) s.values[j * n + h] /= sum;
  }
  s.sq_distances = std::move(dist2);
  return s;
}

std::size_t closeness_rank(const SimilarityMatrix& s, std::size_t j, std::size_t h) {
  std::size_t rank = 1;
  for (std::size_t g = 0; g < s.size; ++g) {
    if (s.closer(j, g, h)) ++rank;
  }
  return rank;
}

std::vector<std::size_t> knn_set(const SimilarityMatrix& s, std::size_t j, std::size_t k) {
  std::vector<std::size_t> out;
  for (std::size_t h = 0; h < s.size; ++h) {
    if (closeness_rank(s, j, h) <= k) out.push_back(h);
  }
  return out;
}

std::vector<std::size_t> reciprocal_intersection(const SimilarityMatrix& s, std::size_t k) {
  std::vector<std::size_t> result(s.size);
  std::iota(result.begin(), result.end(), std::size_t{0});
  for (std::size_t j = 0; j < s.size && !result.empty(); ++j) {
    const auto neighbours = knn_set(s, j, k);
    std::vector<std::size_t> next;
    std::set_intersection(result.begin(), result.end(), neighbours.begin(), neighbours.end(),
                          std::back_inserter(next));
    result = std::move(next);
  }
  return result;
}

const char* to_string(Selector selector) {
  switch (selector) {
    case Selector::Rnf: return "rnf";
    case Selector::L1: return "l1";
    case Selector::Random: return "random";
    case Selector::KMeans: return "kmeans";
  }
  return "?";
}

Selector parse_selector(std::string_view text) {
  for (auto s : {Selector::Rnf, Selector::L1, Selector::Random, Selector::KMeans}) {
    if (text == to_string(s)) return s;
  }
  fail(ErrorKind::Usage, "unknown selector '" + std::string(text) + "' (expected rnf, l1, random or kmeans)");
}

SelectionResult rnf_select(const FilterMatrix& filters, std::size_t target, int layer_id) {
  check_target(filters, target);
  const std::size_t n = filters.rows;
  const auto s = similarity_matrix(filters, layer_id);

  // worst[h] is the largest closeness rank h receives from any filter, so h
  // belongs to the k-reciprocal set exactly when worst[h] <= k.
  std::vector<std::size_t> worst(n, 0);
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.closer(j, a, b); });
    std::size_t rank = 1;
    for (std::size_t pos = 0; pos < n; ++pos) {
      if (pos > 0 && s.closer(j, order[pos - 1], order[pos])) rank = pos + 1;
      worst[order[pos]] = std::max(worst[order[pos]], rank);
    }
  }

  SelectionResult result{layer_id, Selector::Rnf, {}, target, 0, std::nullopt};
  std::vector<std::size_t> members;
  for (std::size_t k = target;; ++k) {
    members.clear();
    for (std::size_t h = 0; h < n; ++h) {
      if (worst[h] <= k) members.push_back(h);
    }
    if (members.size() >= target) {
      result.final_k = k;
      break;
    }
  }

  if (members.size() > target) {
    const auto column = column_excess(s);
    std::stable_sort(members.begin(), members.end(),
                     [&](std::size_t a, std::size_t b) { return column[b] < column[a]; });
    result.trimmed = members.size() - target;
    members.resize(target);
    std::sort(members.begin(), members.end());
  }
  result.kept = std::move(members);
  return result;
}

SelectionResult l1_select(const FilterMatrix& filters, std::size_t target, int layer_id) {
  check_target(filters, target);
  std::vector<double> norms(filters.rows, 0.0);
  for (std::size_t j = 0; j < filters.rows; ++j) {
    for (double v : filters.row(j)) norms[j] += std::fabs(v);
  }
  std::vector<std::size_t> order(filters.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
  order.resize(target);
  std::sort(order.begin(), order.end());
  return SelectionResult{layer_id, Selector::L1, std::move(order), 0, 0, std::nullopt};
}

SelectionResult random_select(const FilterMatrix& filters, std::size_t target, std::uint64_t seed,
                              int layer_id) {
  check_target(filters, target);
  Rng rng(seed);
  std::vector<std::size_t> perm(filters.rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(filters.rows - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(target);
  std::sort(perm.begin(), perm.end());
  return SelectionResult{layer_id, Selector::Random, std::move(perm), 0, 0, seed};
}

KMeansOutcome kmeans(const FilterMatrix& filters, std::size_t clusters, std::uint64_t seed) {
  check_target(filters, clusters);
  const std::size_t n = filters.rows;
  Rng rng(seed);
  KMeansOutcome out;

  // k-means++ seeding. When every remaining point coincides with a chosen
  // centroid the lowest unchosen index is taken.
  std::vector<bool> chosen(n, false);
  auto take = [&](std::size_t i) {
    chosen[i] = true;
    out.centroids.emplace_back(filters.row(i).begin(), filters.row(i).end());
  };
  take(static_cast<std::size_t>(rng.below(n)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (out.centroids.size() < clusters) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(filters.row(i), out.centroids.back()));
      if (!chosen[i]) total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > r) break;
      }
    }
    if (pick == n) pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    take(pick);
  }

  out.assignment.assign(n, 0);
  for (std::size_t it = 0; it < kKMeansMaxIterations; ++it) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      out.assignment[i] = nearest(filters.row(i), out.centroids, &d);
      inertia += d;
    }
    out.inertia.push_back(inertia);
    out.iterations = it + 1;
    if (it > 0) {
      const double prev = out.inertia[it - 1];
      if (prev <= 0.0 || (prev - inertia) / prev < kKMeansTolerance) break;
    }
    if (it + 1 == kKMeansMaxIterations) break;

    // Empty clusters keep their previous centroid.
    std::vector<std::vector<double>> sums(clusters, std::vector<double>(filters.cols, 0.0));
    std::vector<std::size_t> counts(clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = filters.row(i);
      auto& sum = sums[out.assignment[i]];
      for (std::size_t c = 0; c < filters.cols; ++c) sum[c] += row[c];
      ++counts[out.assignment[i]];
    }
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t x = 0; x < filters.cols; ++x) {
        out.centroids[c][x] = sums[c][x] / static_cast<double>(counts[c]);
      }
    }
  }
  return out;
}

SelectionResult kmeans_select(const FilterMatrix& filters, std::size_t target, std::uint64_t seed,
                              int layer_id) {
  const auto clustering = kmeans(filters, target, seed);
  std::vector<bool> taken(filters.rows, false);
  std::vector<std::size_t> kept;
  for (const auto& centroid : clustering.centroids) {
    std::size_t best = filters.rows;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < filters.rows; ++i) {
      if (taken[i]) continue;
      const double d = squared_distance(filters.row(i), centroid);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    taken[best] = true;
    kept.push_back(best);
  }
  std::sort(kept.begin(), kept.end());
  return SelectionResult{layer_id, Selector::KMeans, std::move(kept), 0, 0, seed};
}

SelectionResult select_filters(Selector selector, const FilterMatrix& filters, std::size_t target,
                               std::uint64_t seed, int layer_id) {
  switch (selector) {
    case Selector::Rnf: return rnf_select(filters, target, layer_id);
    case Selector::L1: return l1_select(filters, target, layer_id);
    case Selector::Random: return random_select(filters, target, seed, layer_id);
    case Selector::KMeans: return kmeans_select(filters, target, seed, layer_id);
  }
  fail(ErrorKind::Usage, "unknown selector");
}

}  // namespace clrprune

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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clrprune/arch.hpp"

namespace clrprune {

/// Dense row-major f32 tensor of rank 0..4.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t rank() const { return dims.size(); }
  /// Product of dims, checked against data.size() on insertion into a store.
  std::size_t element_count() const;
};

/// True when dims match and every element has the same bit pattern.
bool bitwise_equal(const Tensor& a, const Tensor& b);

/// Named tensors keyed "<layer>.<param>", iterated in lexicographic order.
///
/// Parameter names follow the usual convention: conv and fully-connected
/// layers own `weight` (and `bias`); batchnorm layers own `weight`, `bias`,
/// `running_mean` and `running_var`.
class WeightStore {
 public:
  using Map = std::map<std::string, Tensor, std::less<>>;

  void insert(std::string name, Tensor tensor);
  const Tensor* find(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

 private:
  Map entries_;
};

std::string weight_key(std::string_view layer);
std::string bias_key(std::string_view layer);

inline constexpr std::uint32_t kClrwVersion = 1;

/// Reads a CLRW file. Rejects bad magic, unknown versions, truncation,
/// trailing bytes and non-finite values.
WeightStore load_weights(const std::string& path);
WeightStore decode_weights(std::span<const std::uint8_t> bytes);
/// Writes a CLRW file; equal stores always produce identical bytes.
void save_weights(const WeightStore& store, const std::string& path);
std::vector<std::uint8_t> encode_weights(const WeightStore& store);

/// Row-major matrix of 64-bit values; row j is one flattened filter.
struct FilterMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FilterMatrix() = default;
  FilterMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  std::span<const double> row(std::size_t j) const { return {values.data() + j * cols, cols}; }
  std::span<double> row(std::size_t j) { return {values.data() + j * cols, cols}; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Reshapes a (n_i, n_{i-1}, h_i, w_i) filter bank into n_i rows of
/// n_{i-1}*h_i*w_i values in (channel, row, col) order.
FilterMatrix flatten_filters(const Tensor& tensor);

/// Verifies that every tensor owned by a layer of `arch` has that layer's
/// exact dims. With `require_conv_weights`, every conv layer must have one.
void check_binding(const ArchSpec& arch, const WeightStore& store, bool require_conv_weights);

/// Deterministic He-normal conv/FC weights, zero biases and unit batchnorm
/// statistics for every layer of `arch`.
WeightStore synthesize_weights(const ArchSpec& arch, std::uint64_t seed);

}  // namespace clrprune

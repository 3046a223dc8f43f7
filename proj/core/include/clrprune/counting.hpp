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

#include "clrprune/arch.hpp"

namespace clrprune {

/// Calibration switches for parameter counting.
struct CountOptions {
  bool count_bias = true;         // add n_i for conv/FC layers flagged with a bias
  bool count_bn_running = false;  // add 2*n_i running statistics per batchnorm
};

using LayerCounts = std::map<int, std::uint64_t>;

/// FLOPs per layer, one multiply-accumulate counted as one FLOP.
/// conv: n_i * n_{i-1} * h_i * w_i * H_out * W_out; FC: n_i * n_{i-1};
/// every other kind contributes zero.
LayerCounts compute_layer_flops(const ArchSpec& arch);

/// Parameters per layer. batchnorm always counts its 2*n_i affine terms.
LayerCounts compute_params(const ArchSpec& arch, const CountOptions& options = {});

std::uint64_t total(const LayerCounts& counts);

}  // namespace clrprune

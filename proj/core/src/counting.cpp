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

#include "clrprune/counting.hpp"

#include <numeric>

namespace clrprune {

LayerCounts compute_layer_flops(const ArchSpec& arch) {
  LayerCounts flops;
  for (const auto& l : arch.layers()) {
    std::uint64_t f = 0;
    if (l.kind == LayerKind::Conv) {
      f = static_cast<std::uint64_t>(l.out_channels * l.in_channels * l.kernel_h * l.kernel_w) *
          static_cast<std::uint64_t>(l.out_h * l.out_w);
    } else if (l.kind == LayerKind::FullyConnected) {
      f = static_cast<std::uint64_t>(l.out_channels * l.in_channels);
    }
    flops[l.id] = f;
  }
  return flops;
}

LayerCounts compute_params(const ArchSpec& arch, const CountOptions& options) {
  LayerCounts params;
  for (const auto& l : arch.layers()) {
    std::uint64_t p = 0;
    const auto n = static_cast<std::uint64_t>(l.out_channels);
    switch (l.kind) {
      case LayerKind::Conv:
        p = n * static_cast<std::uint64_t>(l.in_channels * l.kernel_h * l.kernel_w);
        if (l.bias && options.count_bias) p += n;
        break;
      case LayerKind::FullyConnected:
        p = n * static_cast<std::uint64_t>(l.in_channels);
        if (l.bias && options.count_bias) p += n;
        break;
      case LayerKind::BatchNorm:
        p = 2 * n + (options.count_bn_running ? 2 * n : 0);
        break;
      default:
        break;
    }
    params[l.id] = p;
  }
  return params;
}

std::uint64_t total(const LayerCounts& counts) {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

}  // namespace clrprune

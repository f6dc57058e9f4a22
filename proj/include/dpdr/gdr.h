// Copyright 2026 The DPDR Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPDR_GDR_H_
#define DPDR_GDR_H_

#include <cstdint>
#include <span>
#include <vector>

#include "dpdr/layered_vector.h"

namespace dpdr {

// Per-layer unit direction of a released gradient. Every block has norm one
// except degenerate layers, which are exactly zero.
struct GdrBase {
  LayeredVector b;
  std::int64_t source_step = 0;
  std::vector<bool> degenerate;

  bool IsDegenerate(std::size_t layer) const { return degenerate[layer]; }
  std::size_t degenerate_count() const;
};

// Parallel coefficients (one per layer) and the orthogonal remainder.
struct Decomposition {
  std::vector<double> alphas;
  LayeredVector g_perp;
};

// Relative threshold under which a layer of the noisy gradient is treated
// as degenerate.
inline constexpr double kDegenerateLayerTolerance = 1e-12;

// Normalizes each layer of a released gradient. Layers with norm below
// 1e-12 * max(1, ||noisy_grad||) are zeroed and flagged.
GdrBase NormalizeBase(const LayeredVector& noisy_grad, std::int64_t step);

// Per layer: alpha_l = <g_l, b_l>, g_perp_l = g_l - alpha_l * b_l.
// Degenerate layers give alpha_l = 0 and g_perp_l = g_l.
Decomposition Decompose(const LayeredVector& g, const GdrBase& base);

// Per layer: alpha_l * b_l + g_perp_l.
LayeredVector Reconstruct(std::span<const double> alphas,
                          const LayeredVector& g_perp, const GdrBase& base);

std::vector<Decomposition> DecomposeBatch(
    std::span<const LayeredVector> per_sample, const GdrBase& base);

}  // namespace dpdr

#endif  // DPDR_GDR_H_

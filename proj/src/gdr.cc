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

#include "dpdr/gdr.h"

#include <algorithm>
#include <cmath>

#include "dpdr/errors.h"

namespace dpdr {

std::size_t GdrBase::degenerate_count() const {
  return static_cast<std::size_t>(
      std::count(degenerate.begin(), degenerate.end(), true));
}

GdrBase NormalizeBase(const LayeredVector& noisy_grad, std::int64_t step) {
  GdrBase base{noisy_grad, step,
               std::vector<bool>(noisy_grad.layer_count(), false)};
  const double threshold =
      kDegenerateLayerTolerance * std::max(1.0, L2Norm(noisy_grad));
  for (std::size_t l = 0; l < noisy_grad.layer_count(); ++l) {
    const double norm = L2NormLayer(noisy_grad, l);
    auto block = base.b.mutable_layer(l);
    if (norm < threshold) {
      std::fill(block.begin(), block.end(), 0.0);
      base.degenerate[l] = true;
      continue;
    }
    for (double& v : block) v /= norm;
  }
  return base;
}

Decomposition Decompose(const LayeredVector& g, const GdrBase& base) {
  CheckSameShape(g, base.b);
  Decomposition d{std::vector<double>(g.layer_count(), 0.0), g};
  for (std::size_t l = 0; l < g.layer_count(); ++l) {
    if (base.IsDegenerate(l)) continue;
    const double alpha = DotLayer(g, base.b, l);
    d.alphas[l] = alpha;
    auto perp = d.g_perp.mutable_layer(l);
    const auto b = base.b.layer(l);
    for (std::size_t i = 0; i < perp.size(); ++i) perp[i] -= alpha * b[i];
  }
  return d;
}

LayeredVector Reconstruct(std::span<const double> alphas,
                          const LayeredVector& g_perp, const GdrBase& base) {
  CheckSameShape(g_perp, base.b);
  if (alphas.size() != g_perp.layer_count()) {
    throw ContractViolation("one parallel coefficient per layer is required");
  }
  LayeredVector out = g_perp;
  for (std::size_t l = 0; l < out.layer_count(); ++l) {
    if (base.IsDegenerate(l)) continue;
    auto block = out.mutable_layer(l);
    const auto b = base.b.layer(l);
    for (std::size_t i = 0; i < block.size(); ++i) block[i] += alphas[l] * b[i];
  }
  return out;
}

std::vector<Decomposition> DecomposeBatch(
    std::span<const LayeredVector> per_sample, const GdrBase& base) {
  std::vector<Decomposition> out;
  out.reserve(per_sample.size());
  for (const LayeredVector& g : per_sample) out.push_back(Decompose(g, base));
  return out;
}

}  // namespace dpdr

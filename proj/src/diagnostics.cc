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

#include "dpdr/diagnostics.h"

#include <algorithm>
#include <cmath>

#include "dpdr/errors.h"

namespace dpdr {

CoherenceStats ComputeCoherence(const LayeredVector& prev,
                                const LayeredVector& curr) {
  CheckSameShape(prev, curr);
  CoherenceStats s;
  const double np = L2Norm(prev);
  const double nc = L2Norm(curr);
  if (np == 0.0 || nc == 0.0) {
    s.degenerate = true;
  } else {
    s.cosine = std::clamp(Dot(prev, curr) / (np * nc), -1.0, 1.0);
  }
  if (nc > 0.0) s.norm_ratio = L2Norm(Subtract(curr, prev)) / nc;
  return s;
}

double Quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ContractViolation("quantile of an empty list");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("p must be in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double Median(std::vector<double> values) {
  return Quantile(std::move(values), 0.5);
}

Quantiles Summarize(const std::vector<double>& values) {
  return {Quantile(values, 0.1), Quantile(values, 0.5), Quantile(values, 0.9)};
}

SensitivityRecord SensitivityProbe(std::span<const LayeredVector> per_sample,
                                   const GdrBase& base, double w_step_norm) {
  if (per_sample.empty()) {
    throw ContractViolation("sensitivity probe needs a nonempty batch");
  }
  const std::size_t m = base.b.layer_count();
  std::vector<double> grad, perp, ratio;
  std::vector<std::vector<double>> alpha_abs(m);
  for (const Decomposition& d : DecomposeBatch(per_sample, base)) {
    perp.push_back(L2Norm(d.g_perp));
    for (std::size_t l = 0; l < m; ++l) {
      alpha_abs[l].push_back(std::abs(d.alphas[l]));
    }
  }
  for (std::size_t i = 0; i < per_sample.size(); ++i) {
    grad.push_back(L2Norm(per_sample[i]));
    ratio.push_back(grad.back() > 0.0 ? perp[i] / grad.back() : 0.0);
  }
  SensitivityRecord r;
  r.grad_norm = Summarize(grad);
  r.perp_norm = Summarize(perp);
  r.perp_ratio = Summarize(ratio);
  for (auto& a : alpha_abs) r.alpha_abs_median.push_back(Median(a));
  r.w_step_norm = w_step_norm;
  r.perp_norms = std::move(perp);
  return r;
}

std::vector<HistogramBin> Histogram(std::span<const double> values,
                                    int bins) {
  if (values.empty()) throw ContractViolation("histogram of an empty list");
  if (bins < 1) throw ContractViolation("histogram needs at least one bin");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn;
  const double range = *mx - *mn;
  const double width = range > 0.0 ? range / bins : 1.0;
  std::vector<HistogramBin> out(bins);
  for (int i = 0; i < bins; ++i) out[i].edge = lo + i * width;
  for (double v : values) {
    auto idx = static_cast<int>((v - lo) / width);
    idx = std::clamp(idx, 0, bins - 1);
    ++out[idx].count;
  }
  return out;
}

}  // namespace dpdr

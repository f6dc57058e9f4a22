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

#ifndef DPDR_DIAGNOSTICS_H_
#define DPDR_DIAGNOSTICS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "dpdr/gdr.h"
#include "dpdr/layered_vector.h"

namespace dpdr {

// Per-step telemetry. Norm columns that do not apply to a method are NaN and
// serialize as empty CSV cells.
struct MetricsRow {
  std::int64_t step = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double grad_norm_median = 0.0;
  double perp_norm_median = 0.0;
  double diff_norm_median = 0.0;
  double alpha_vec_norm = 0.0;
  double cos_prev = 0.0;
  double eps_cum = 0.0;
  double wall_ms = 0.0;
  // Median over the batch of per-sample ||g_perp|| / ||g||. Kept in memory
  // only; the CSV layout is fixed.
  double perp_ratio_median = 0.0;
};

struct CoherenceStats {
  double cosine = 0.0;
  double norm_ratio = 0.0;
  // Set when either vector is zero; cosine (and for a zero `curr`, the
  // ratio) is then reported as 0.
  bool degenerate = false;
};

// cosine(prev, curr) and ||curr - prev|| / ||curr||.
CoherenceStats ComputeCoherence(const LayeredVector& prev,
                                const LayeredVector& curr);

struct Quantiles {
  double p10 = 0.0;
  double median = 0.0;
  double p90 = 0.0;
};

// Linear-interpolated quantile, p in [0, 1]. Empty input is an error.
double Quantile(std::vector<double> values, double p);
double Median(std::vector<double> values);
Quantiles Summarize(const std::vector<double>& values);

struct SensitivityRecord {
  Quantiles grad_norm;
  Quantiles perp_norm;
  Quantiles perp_ratio;
  // Median |alpha_l| per layer.
  std::vector<double> alpha_abs_median;
  // ||w_t - w_{t-1}||, recorded for offline smoothness estimates.
  double w_step_norm = 0.0;
  std::vector<double> perp_norms;
};

SensitivityRecord SensitivityProbe(std::span<const LayeredVector> per_sample,
                                   const GdrBase& base, double w_step_norm);

struct HistogramBin {
  double edge = 0.0;  // left edge
  std::size_t count = 0;
};

// Equal-width bins over [min, max]; the maximum lands in the last bin.
std::vector<HistogramBin> Histogram(std::span<const double> values, int bins);

}  // namespace dpdr

#endif  // DPDR_DIAGNOSTICS_H_

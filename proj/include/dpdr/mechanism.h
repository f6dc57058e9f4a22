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

#ifndef DPDR_MECHANISM_H_
#define DPDR_MECHANISM_H_

#include <span>
#include <vector>

#include "dpdr/layered_vector.h"
#include "dpdr/rng.h"

namespace dpdr {

// Clipping bounds for the full gradient, the orthogonal component and the
// per-layer parallel coefficients.
struct ClipSpec {
  double c_g = 1.0;
  double c_perp = 1.0;
  double c_alpha = 1.0;

  void Validate() const;
};

// Noise multipliers. Zero is allowed for non-private ablations.
struct NoisePlan {
  double sigma_g = 0.0;
  double sigma_perp = 0.0;
  double sigma_alpha = 0.0;

  void Validate() const;
  bool AnyZero() const {
    return sigma_g == 0.0 || sigma_perp == 0.0 || sigma_alpha == 0.0;
  }
};

// v / max(1, ||v||_2 / c), with the norm taken over all layers.
LayeredVector ClipToNorm(const LayeredVector& v, double c);

// Joint L2 clip of a per-sample coefficient vector; signs are kept.
std::vector<double> ClipAlphaVec(std::span<const double> alphas, double c);

// (1/B) * (sum_i clip(g_i, c) + N(0, sigma^2 c^2 I)) with B the list length.
// The noise is drawn once for the batch sum from `stream`.
LayeredVector AggregateAndPerturb(std::span<const LayeredVector> per_sample,
                                  double c, double sigma, RngStream& stream);

// Same mechanism for per-sample coefficient vectors of a common length m.
std::vector<double> AggregateAndPerturbScalars(
    std::span<const std::vector<double>> per_sample, double c, double sigma,
    RngStream& stream);

}  // namespace dpdr

#endif  // DPDR_MECHANISM_H_

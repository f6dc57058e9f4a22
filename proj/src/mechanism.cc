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

#include "dpdr/mechanism.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpdr/errors.h"

namespace dpdr {
namespace {

void CheckBound(double c, const char* name) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw ContractViolation(std::string(name) +
                            " must be positive and finite");
  }
}

void CheckMultiplier(double sigma, const char* name) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ContractViolation(std::string(name) +
                            " must be nonnegative and finite");
  }
}

}  // namespace

void ClipSpec::Validate() const {
  CheckBound(c_g, "c_g");
  CheckBound(c_perp, "c_perp");
  CheckBound(c_alpha, "c_alpha");
}

void NoisePlan::Validate() const {
  CheckMultiplier(sigma_g, "sigma_g");
  CheckMultiplier(sigma_perp, "sigma_perp");
  CheckMultiplier(sigma_alpha, "sigma_alpha");
}

LayeredVector ClipToNorm(const LayeredVector& v, double c) {
  CheckBound(c, "clip bound");
  const double scale = std::max(1.0, L2Norm(v) / c);
  if (scale == 1.0) return v;
  LayeredVector out = v;
  for (double& x : out.mutable_values()) x /= scale;
  return out;
}

std::vector<double> ClipAlphaVec(std::span<const double> alphas, double c) {
  CheckBound(c, "alpha clip bound");
  double sq = 0.0;
  for (double a : alphas) sq += a * a;
  const double scale = std::max(1.0, std::sqrt(sq) / c);
  std::vector<double> out(alphas.begin(), alphas.end());
  if (scale != 1.0) {
    for (double& a : out) a /= scale;
  }
  return out;
}

LayeredVector AggregateAndPerturb(std::span<const LayeredVector> per_sample,
                                  double c, double sigma, RngStream& stream) {
  if (per_sample.empty()) {
    throw ContractViolation("AggregateAndPerturb needs at least one sample");
  }
  CheckBound(c, "clip bound");
  CheckMultiplier(sigma, "noise multiplier");
  LayeredVector sum(per_sample.front().layer_dims());
  for (const LayeredVector& g : per_sample) {
    CheckSameShape(sum, g);
    const LayeredVector clipped = ClipToNorm(g, c);
    auto s = sum.mutable_values();
    auto x = clipped.values();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += x[i];
  }
  if (sigma > 0.0) {
    const LayeredVector noise =
        GaussianSample(stream, sum.layer_dims(), sigma * c);
    sum = Add(sum, noise);
  }
  const double b = static_cast<double>(per_sample.size());
  for (double& x : sum.mutable_values()) x /= b;
  return sum;
}

std::vector<double> AggregateAndPerturbScalars(
    std::span<const std::vector<double>> per_sample, double c, double sigma,
    RngStream& stream) {
  if (per_sample.empty()) {
    throw ContractViolation(
        "AggregateAndPerturbScalars needs at least one sample");
  }
  CheckBound(c, "alpha clip bound");
  CheckMultiplier(sigma, "noise multiplier");
  const std::size_t m = per_sample.front().size();
  std::vector<double> sum(m, 0.0);
  for (const std::vector<double>& a : per_sample) {
    if (a.size() != m) {
      throw ContractViolation("coefficient vectors differ in length");
    }
    const std::vector<double> clipped = ClipAlphaVec(a, c);
    for (std::size_t l = 0; l < m; ++l) sum[l] += clipped[l];
  }
  if (sigma > 0.0) {
    const std::vector<double> noise = GaussianSample(stream, m, sigma * c);
    for (std::size_t l = 0; l < m; ++l) sum[l] += noise[l];
  }
  const double b = static_cast<double>(per_sample.size());
  for (double& x : sum) x /= b;
  return sum;
}

}  // namespace dpdr

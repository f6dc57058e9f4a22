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

#include "dpdr/layered_vector.h"

#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "dpdr/errors.h"

namespace dpdr {
namespace {

std::vector<std::size_t> OffsetsFor(const std::vector<std::size_t>& dims) {
  if (dims.empty()) {
    throw ContractViolation("LayeredVector needs at least one layer");
  }
  std::vector<std::size_t> offsets(dims.size() + 1, 0);
  for (std::size_t l = 0; l < dims.size(); ++l) {
    if (dims[l] == 0) {
      throw ContractViolation("LayeredVector layer " + std::to_string(l) +
                              " has zero dimension");
    }
    offsets[l + 1] = offsets[l] + dims[l];
  }
  return offsets;
}

double SumProducts(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

LayeredVector::LayeredVector(std::vector<std::size_t> layer_dims)
    : dims_(std::move(layer_dims)),
      offsets_(OffsetsFor(dims_)),
      values_(offsets_.back(), 0.0) {}

LayeredVector::LayeredVector(std::vector<std::size_t> layer_dims,
                             std::vector<double> values)
    : dims_(std::move(layer_dims)),
      offsets_(OffsetsFor(dims_)),
      values_(std::move(values)) {
  if (values_.size() != offsets_.back()) {
    throw ContractViolation("LayeredVector: " + std::to_string(values_.size()) +
                            " values for total dimension " +
                            std::to_string(offsets_.back()));
  }
}

std::span<const double> LayeredVector::layer(std::size_t l) const {
  if (l >= dims_.size()) throw ContractViolation("layer index out of range");
  return std::span<const double>(values_).subspan(offsets_[l], dims_[l]);
}

std::span<double> LayeredVector::mutable_layer(std::size_t l) {
  if (l >= dims_.size()) throw ContractViolation("layer index out of range");
  return std::span<double>(values_).subspan(offsets_[l], dims_[l]);
}

bool LayeredVector::AllFinite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void CheckSameShape(const LayeredVector& a, const LayeredVector& b) {
  if (!a.SameShape(b)) {
    throw ContractViolation("shape mismatch between layered vectors (" +
                            std::to_string(a.total_dim()) + " vs " +
                            std::to_string(b.total_dim()) + " coordinates)");
  }
}

double DotLayer(const LayeredVector& a, const LayeredVector& b,
                std::size_t layer) {
  CheckSameShape(a, b);
  return SumProducts(a.layer(layer), b.layer(layer));
}

double Dot(const LayeredVector& a, const LayeredVector& b) {
  CheckSameShape(a, b);
  double total = 0.0;
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    total += SumProducts(a.layer(l), b.layer(l));
  }
  return total;
}

double L2Norm(const LayeredVector& a) { return std::sqrt(Dot(a, a)); }

double L2NormLayer(const LayeredVector& a, std::size_t layer) {
  return std::sqrt(DotLayer(a, a, layer));
}

LayeredVector Axpy(double c, const LayeredVector& x, const LayeredVector& y) {
  CheckSameShape(x, y);
  LayeredVector out = y;
  auto o = out.mutable_values();
  auto xs = x.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += c * xs[i];
  return out;
}

LayeredVector Scale(double c, const LayeredVector& x) {
  LayeredVector out = x;
  for (double& v : out.mutable_values()) v *= c;
  return out;
}

LayeredVector Add(const LayeredVector& a, const LayeredVector& b) {
  return Axpy(1.0, a, b);
}

LayeredVector Subtract(const LayeredVector& a, const LayeredVector& b) {
  return Axpy(-1.0, b, a);
}

LayeredVector Mean(std::span<const LayeredVector> vs) {
  if (vs.empty()) throw ContractViolation("Mean of an empty list");
  LayeredVector acc(vs.front().layer_dims());
  for (const LayeredVector& v : vs) {
    CheckSameShape(acc, v);
    auto a = acc.mutable_values();
    auto x = v.values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += x[i];
  }
  const double n = static_cast<double>(vs.size());
  for (double& v : acc.mutable_values()) v /= n;
  return acc;
}

}  // namespace dpdr

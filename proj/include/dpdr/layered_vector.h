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

#ifndef DPDR_LAYERED_VECTOR_H_
#define DPDR_LAYERED_VECTOR_H_

#include <cstddef>
#include <span>
#include <vector>

namespace dpdr {

// A flat real vector partitioned into an ordered list of layer blocks. Used
// for model parameters, gradients, noise and the decomposition base.
//
// Two vectors are shape-compatible iff their layer_dims are identical; every
// binary operation checks this and throws ContractViolation otherwise.
class LayeredVector {
 public:
  LayeredVector() = default;

  // Zero vector with the given block sizes. Every dim must be positive and
  // there must be at least one block.
  explicit LayeredVector(std::vector<std::size_t> layer_dims);

  // Takes ownership of `values`, whose length must equal sum(layer_dims).
  LayeredVector(std::vector<std::size_t> layer_dims,
                std::vector<double> values);

  std::size_t layer_count() const { return dims_.size(); }
  std::size_t total_dim() const { return values_.size(); }
  const std::vector<std::size_t>& layer_dims() const { return dims_; }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }
  std::span<const double> layer(std::size_t l) const;
  std::span<double> mutable_layer(std::size_t l);

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool SameShape(const LayeredVector& other) const {
    return dims_ == other.dims_;
  }

  // True iff every coordinate is finite.
  bool AllFinite() const;

  // Bitwise equality of shape and coordinates.
  friend bool operator==(const LayeredVector& a, const LayeredVector& b) {
    return a.dims_ == b.dims_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

// Throws ContractViolation unless a and b have identical layer_dims.
void CheckSameShape(const LayeredVector& a, const LayeredVector& b);

// Reductions use a fixed order: left to right inside each layer, then layer
// partial sums left to right. Results do not depend on threading.
double Dot(const LayeredVector& a, const LayeredVector& b);
double DotLayer(const LayeredVector& a, const LayeredVector& b,
                std::size_t layer);
double L2Norm(const LayeredVector& a);
double L2NormLayer(const LayeredVector& a, std::size_t layer);

// c * x + y.
LayeredVector Axpy(double c, const LayeredVector& x, const LayeredVector& y);
LayeredVector Scale(double c, const LayeredVector& x);
LayeredVector Add(const LayeredVector& a, const LayeredVector& b);
LayeredVector Subtract(const LayeredVector& a, const LayeredVector& b);

// Coordinate-wise mean of a nonempty list of shape-compatible vectors, summed
// in list order.
LayeredVector Mean(std::span<const LayeredVector> vs);

}  // namespace dpdr

#endif  // DPDR_LAYERED_VECTOR_H_

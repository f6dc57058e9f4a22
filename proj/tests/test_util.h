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

#ifndef DPDR_TESTS_TEST_UTIL_H_
#define DPDR_TESTS_TEST_UTIL_H_

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "dpdr/layered_vector.h"
#include "dpdr/model.h"
#include "dpdr/rng.h"

namespace dpdr {

inline void PrintTo(const LayeredVector& v, std::ostream* os) {
  *os << "[";
  for (std::size_t i = 0; i < v.total_dim() && i < 12; ++i) {
    *os << (i ? ", " : "") << v[i];
  }
  if (v.total_dim() > 12) *os << ", ...";
  *os << "]";
}

}  // namespace dpdr

namespace dpdr::testing {

inline LayeredVector RandomVector(const std::vector<std::size_t>& dims,
                                  RngStream& rng, double scale = 1.0) {
  LayeredVector v(dims);
  for (double& x : v.mutable_values()) x = scale * rng.NextGaussian();
  return v;
}

inline std::vector<std::size_t> RandomDims(RngStream& rng, int max_layers,
                                           int max_dim) {
  const int m = 1 + static_cast<int>(rng.NextU64() % max_layers);
  std::vector<std::size_t> dims;
  for (int l = 0; l < m; ++l) dims.push_back(1 + rng.NextU64() % max_dim);
  return dims;
}

// Owns the storage a Batch views.
struct OwnedBatch {
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;

  Batch View() const {
    Batch b;
    for (const auto& x : inputs) b.inputs.emplace_back(x);
    b.labels = labels;
    return b;
  }
};

inline OwnedBatch RandomBatch(int d_in, int n_classes, std::size_t size,
                              RngStream& rng) {
  OwnedBatch b;
  for (std::size_t i = 0; i < size; ++i) {
    std::vector<double> x(d_in);
    for (double& v : x) v = rng.NextGaussian();
    b.inputs.push_back(std::move(x));
    b.labels.push_back(static_cast<int>(rng.NextU64() % n_classes));
  }
  return b;
}

inline double RelErr(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline double RelErr(const LayeredVector& got, const LayeredVector& want) {
  const double denom = std::max(L2Norm(want), 1e-300);
  return L2Norm(Subtract(got, want)) / denom;
}

}  // namespace dpdr::testing

#endif  // DPDR_TESTS_TEST_UTIL_H_

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

#ifndef DPDR_DATASET_H_
#define DPDR_DATASET_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpdr/model.h"
#include "dpdr/rng.h"

namespace dpdr {

// Immutable labelled dataset with row-major features.
class Dataset {
 public:
  Dataset(std::string name, int d_in, int n_classes,
          std::vector<double> features, std::vector<int> labels);

  const std::string& name() const { return name_; }
  std::size_t size() const { return labels_.size(); }
  int d_in() const { return d_in_; }
  int n_classes() const { return n_classes_; }

  std::span<const double> input(std::size_t i) const {
    return std::span<const double>(features_).subspan(i * d_in_, d_in_);
  }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<double>& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }

  Batch AsBatch() const;
  Batch Subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::string name_;
  int d_in_;
  int n_classes_;
  std::vector<double> features_;
  std::vector<int> labels_;
};

// Reads an IDX image file (magic 0x00000803, unsigned bytes) and its label
// file (magic 0x00000801). Pixels are scaled by 1/255. `limit` keeps the
// first `limit` examples and must be >= 1 when given.
Dataset LoadIdxPair(const std::string& images_path,
                    const std::string& labels_path,
                    std::optional<std::size_t> limit = std::nullopt);

// Isotropic unit-variance Gaussian blobs. Class centers form a regular
// simplex with pairwise distance `margin` (when n_classes <= d_in), labels
// cycle through the classes so every class is present.
Dataset GenSynthetic(std::size_t n, int d_in, int n_classes, double margin,
                     std::uint64_t seed);

// Includes each example independently with probability q, in index order.
Batch PoissonSample(const Dataset& dataset, double q, RngStream& stream);
std::vector<std::size_t> PoissonSampleIndices(std::size_t n, double q,
                                              RngStream& stream);

// Text cache: header `name,n,d_in,n_classes`, then `label,x1,...,xd` rows.
// Values are written in shortest round-trip form, so save/load is exact.
void SaveCache(const Dataset& dataset, const std::string& path);
Dataset LoadCache(const std::string& path);
std::string FormatDouble(double v);

}  // namespace dpdr

#endif  // DPDR_DATASET_H_

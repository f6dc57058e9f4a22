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

#ifndef DPDR_MODEL_H_
#define DPDR_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpdr/layered_vector.h"

namespace dpdr {

enum class Activation { kRelu, kTanh };

// Fully connected classifier. An empty `hidden` list is multinomial logistic
// regression.
struct Architecture {
  int d_in = 0;
  std::vector<int> hidden;
  int n_classes = 0;
  Activation activation = Activation::kRelu;

  static Architecture LogisticRegression(int d_in, int n_classes) {
    return {d_in, {}, n_classes, Activation::kRelu};
  }

  // One block per weight matrix (row-major, out x in) followed by its bias
  // vector: {W1, b1, W2, b2, ...}.
  std::vector<std::size_t> LayerDims() const;
  std::string Describe() const;
};

// Non-owning view of labelled examples. The spans must outlive the batch.
struct Batch {
  std::vector<std::span<const double>> inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
};

class Model {
 public:
  Model(Architecture arch, LayeredVector parameters);

  const Architecture& architecture() const { return arch_; }
  const LayeredVector& parameters() const { return params_; }

  std::vector<double> Logits(std::span<const double> x) const;
  int Predict(std::span<const double> x) const;

 private:
  Architecture arch_;
  LayeredVector params_;
};

// Deterministic from `seed`: weights ~ N(0, 1/fan_in), biases zero.
Model InitModel(const Architecture& arch, std::uint64_t seed);

// Mean cross-entropy over the batch.
double Loss(const Model& model, const Batch& batch);

// Fraction of batch examples whose arg-max logit equals the label.
double Accuracy(const Model& model, const Batch& batch);

// Exact gradient of each example's cross-entropy, in batch order.
std::vector<LayeredVector> PerSampleGradients(const Model& model,
                                              const Batch& batch);

// w <- w - lr * direction.
Model ApplyUpdate(const Model& model, const LayeredVector& direction,
                  double lr);

}  // namespace dpdr

#endif  // DPDR_MODEL_H_

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

#include "dpdr/model.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "dpdr/errors.h"
#include "dpdr/rng.h"

namespace dpdr {
namespace {

void ValidateArchitecture(const Architecture& arch) {
  if (arch.d_in <= 0) throw ContractViolation("d_in must be positive");
  if (arch.n_classes < 2) {
    throw ContractViolation("n_classes must be at least 2");
  }
  for (int h : arch.hidden) {
    if (h <= 0) throw ContractViolation("hidden widths must be positive");
  }
}

// Widths of every activation from input to logits.
std::vector<int> Widths(const Architecture& arch) {
  std::vector<int> w{arch.d_in};
  w.insert(w.end(), arch.hidden.begin(), arch.hidden.end());
  w.push_back(arch.n_classes);
  return w;
}

double Activate(Activation a, double z) {
  return a == Activation::kRelu ? std::max(z, 0.0) : std::tanh(z);
}

// Derivative expressed through the pre-activation z and output h.
double ActivateDerivative(Activation a, double z, double h) {
  if (a == Activation::kRelu) return z > 0.0 ? 1.0 : 0.0;
  return 1.0 - h * h;
}

void CheckBatch(const Architecture& arch, const Batch& batch) {
  if (batch.empty()) throw ContractViolation("batch must be nonempty");
  if (batch.inputs.size() != batch.labels.size()) {
    throw ContractViolation("batch inputs and labels differ in length");
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.labels[i] < 0 || batch.labels[i] >= arch.n_classes) {
      throw ContractViolation("label " + std::to_string(batch.labels[i]) +
                              " out of range at batch index " +
                              std::to_string(i));
    }
    if (batch.inputs[i].size() != static_cast<std::size_t>(arch.d_in)) {
      throw ContractViolation("input dimension mismatch at batch index " +
                              std::to_string(i));
    }
  }
}

// Forward pass retaining pre-activations and activations of every layer.
struct Trace {
  std::vector<std::vector<double>> pre;   // z_k, k = 1..L
  std::vector<std::vector<double>> post;  // h_k, k = 0..L-1 (h_0 = x)
  std::vector<double> logits;
};

Trace Forward(const Architecture& arch, const LayeredVector& params,
              std::span<const double> x) {
  const std::vector<int> widths = Widths(arch);
  const std::size_t n_layers = widths.size() - 1;
  Trace t;
  t.post.emplace_back(x.begin(), x.end());
  for (std::size_t k = 0; k < n_layers; ++k) {
    const auto w = params.layer(2 * k);
    const auto b = params.layer(2 * k + 1);
    const std::vector<double>& in = t.post.back();
    const std::size_t n_in = widths[k];
    const std::size_t n_out = widths[k + 1];
    std::vector<double> z(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
      double acc = b[o];
      const double* row = w.data() + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * in[i];
      z[o] = acc;
    }
    if (k + 1 == n_layers) {
      t.logits = z;
      t.pre.push_back(std::move(z));
    } else {
      std::vector<double> h(n_out);
      for (std::size_t o = 0; o < n_out; ++o) {
        h[o] = Activate(arch.activation, z[o]);
      }
      t.pre.push_back(std::move(z));
      t.post.push_back(std::move(h));
    }
  }
  return t;
}

double LogSumExp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

int ArgMax(std::span<const double> z) {
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

}  // namespace

std::vector<std::size_t> Architecture::LayerDims() const {
  ValidateArchitecture(*this);
  const std::vector<int> widths = Widths(*this);
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    dims.push_back(static_cast<std::size_t>(widths[k]) * widths[k + 1]);
    dims.push_back(static_cast<std::size_t>(widths[k + 1]));
  }
  return dims;
}

std::string Architecture::Describe() const {
  std::string s = hidden.empty() ? "logreg(" : "mlp(";
  s += std::to_string(d_in);
  for (int h : hidden) s += "-" + std::to_string(h);
  s += "-" + std::to_string(n_classes) + ")";
  if (!hidden.empty()) {
    s += activation == Activation::kRelu ? "[relu]" : "[tanh]";
  }
  return s;
}

Model::Model(Architecture arch, LayeredVector parameters)
    : arch_(std::move(arch)), params_(std::move(parameters)) {
  if (params_.layer_dims() != arch_.LayerDims()) {
    throw ContractViolation("parameters do not match architecture " +
                            arch_.Describe());
  }
}

std::vector<double> Model::Logits(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(arch_.d_in)) {
    throw ContractViolation("input dimension mismatch");
  }
  return Forward(arch_, params_, x).logits;
}

int Model::Predict(std::span<const double> x) const { return ArgMax(Logits(x)); }

Model InitModel(const Architecture& arch, std::uint64_t seed) {
  LayeredVector params(arch.LayerDims());
  const std::vector<int> widths = Widths(arch);
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    RngStream stream(seed, {0, StreamTag::kModelInit,
                            static_cast<std::int64_t>(k)});
    const double std = 1.0 / std::sqrt(static_cast<double>(widths[k]));
    for (double& v : params.mutable_layer(2 * k)) {
      v = std * stream.NextGaussian();
    }
  }
  return Model(arch, std::move(params));
}

double Loss(const Model& model, const Batch& batch) {
  CheckBatch(model.architecture(), batch);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::vector<double> z = model.Logits(batch.inputs[i]);
    total += LogSumExp(z) - z[batch.labels[i]];
  }
  return total / static_cast<double>(batch.size());
}

double Accuracy(const Model& model, const Batch& batch) {
  CheckBatch(model.architecture(), batch);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (model.Predict(batch.inputs[i]) == batch.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

std::vector<LayeredVector> PerSampleGradients(const Model& model,
                                              const Batch& batch) {
  const Architecture& arch = model.architecture();
  CheckBatch(arch, batch);
  const LayeredVector& params = model.parameters();
  const std::vector<int> widths = Widths(arch);
  const std::size_t n_layers = widths.size() - 1;

  std::vector<LayeredVector> grads;
  grads.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Trace t = Forward(arch, params, batch.inputs[i]);
    LayeredVector g(params.layer_dims());

    // dL/dz at the logits: softmax(z) - onehot(y).
    const double lse = LogSumExp(t.logits);
    std::vector<double> delta(t.logits.size());
    for (std::size_t c = 0; c < delta.size(); ++c) {
      delta[c] = std::exp(t.logits[c] - lse);
    }
    delta[batch.labels[i]] -= 1.0;

    for (std::size_t k = n_layers; k-- > 0;) {
      const std::vector<double>& in = t.post[k];
      const std::size_t n_in = widths[k];
      const std::size_t n_out = widths[k + 1];
      auto gw = g.mutable_layer(2 * k);
      auto gb = g.mutable_layer(2 * k + 1);
      for (std::size_t o = 0; o < n_out; ++o) {
        gb[o] = delta[o];
        double* row = gw.data() + o * n_in;
        for (std::size_t j = 0; j < n_in; ++j) row[j] = delta[o] * in[j];
      }
      if (k == 0) break;
      const auto w = params.layer(2 * k);
      std::vector<double> prev(n_in, 0.0);
      for (std::size_t o = 0; o < n_out; ++o) {
        const double* row = w.data() + o * n_in;
        for (std::size_t j = 0; j < n_in; ++j) prev[j] += row[j] * delta[o];
      }
      for (std::size_t j = 0; j < n_in; ++j) {
        prev[j] *= ActivateDerivative(arch.activation, t.pre[k - 1][j], in[j]);
      }
      delta = std::move(prev);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

Model ApplyUpdate(const Model& model, const LayeredVector& direction,
                  double lr) {
  return Model(model.architecture(),
               Axpy(-lr, direction, model.parameters()));
}

}  // namespace dpdr

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

#ifndef DPDR_TRAINERS_H_
#define DPDR_TRAINERS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpdr/accountant.h"
#include "dpdr/dataset.h"
#include "dpdr/diagnostics.h"
#include "dpdr/gdr.h"
#include "dpdr/layered_vector.h"
#include "dpdr/mechanism.h"
#include "dpdr/model.h"

namespace dpdr {

enum class Method { kSgd, kDpsgd, kDiff, kDpdr };

const char* MethodName(Method m);
Method ParseMethod(const std::string& name);

// Calibration target: sigma_alpha is fixed, sigma_perp is searched and
// sigma_g = ratio_g * sigma_perp.
struct PrivacyTarget {
  double eps = 0.0;
  double delta = 1e-5;
  double sigma_alpha = 1.0;
  double ratio_g = 1.0;
};

struct TrainConfig {
  Method method = Method::kSgd;
  std::int64_t total_steps = 1;
  std::int64_t switch_step = 1;
  std::int64_t batch = 1;  // expected Poisson batch size
  double lr = 0.1;
  ClipSpec clip;
  NoisePlan noise;
  double delta = 1e-5;
  std::optional<PrivacyTarget> privacy;
  std::uint64_t seed = 0;
  Architecture arch;

  void Validate(std::size_t dataset_size) const;
  double SamplingRatio(std::size_t dataset_size) const {
    return static_cast<double>(batch) / static_cast<double>(dataset_size);
  }
};

// Everything one step needs besides the batch: the seed and step index
// select the noise streams, so noise never depends on scheduling.
struct StepContext {
  std::uint64_t seed = 0;
  std::int64_t step = 1;
  double lr = 0.1;
  double q = 1.0;
  // Divisor used for an empty Poisson batch.
  std::int64_t expected_batch = 1;
  // Previous released gradient, read for telemetry only.
  const LayeredVector* prev_release = nullptr;
};

struct StepOutcome {
  LayeredVector released;
  Model model;
  MetricsRow metrics;
  std::optional<ReleaseEvent> event;
  // Per-sample ||g_perp|| of a GDR step, empty otherwise.
  std::vector<double> perp_norms;
};

StepOutcome SgdStep(const Model& model, const Batch& batch,
                    const StepContext& ctx);

StepOutcome DpsgdStep(const Model& model, const Batch& batch, double c_g,
                      double sigma_g, const StepContext& ctx);

// DIFF: clips g_i - prev_release, perturbs, then adds prev_release back.
StepOutcome DiffStep(const Model& model, const Batch& batch,
                     const LayeredVector& prev_release, double c_d,
                     double sigma_d, const StepContext& ctx);

// One decomposition/reconstruction step. Reads only the released base, never
// earlier raw gradients. Returns the outcome and the next base.
std::pair<StepOutcome, GdrBase> GdrStep(const Model& model, const Batch& batch,
                                        const GdrBase& base,
                                        const ClipSpec& clip,
                                        const NoisePlan& noise,
                                        const StepContext& ctx);

struct PhaseSteps {
  std::int64_t first = 0;
  std::int64_t gdr = 0;
  std::int64_t dpsgd = 0;
};

struct TrainOptions {
  bool record_timing = false;
  bool keep_releases = false;
};

struct TrainResult {
  Model model;
  std::vector<MetricsRow> metrics;
  std::optional<PrivacyLedger> ledger;
  NoisePlan noise;
  PhaseSteps phases;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  std::optional<EpsilonAtDelta> privacy;
  // Per-sample ||g_perp|| from the last GDR step.
  std::vector<double> perp_snapshot;
  // Released gradients in step order, when TrainOptions::keep_releases.
  std::vector<LayeredVector> releases;
};

// Ledger schedule a config produces; empty for sgd.
std::vector<SchedulePhase> ScheduleFor(const TrainConfig& config,
                                       std::size_t dataset_size);

// Resolves the noise plan, calibrating when a privacy target is set.
// Throws InfeasibleBudget before any data is touched.
NoisePlan ResolveNoise(const TrainConfig& config, std::size_t dataset_size,
                       std::optional<CalibrationResult>* calibration = nullptr);

// Runs the configured method. The config must carry a resolved noise plan;
// a set privacy target is calibrated first.
TrainResult Train(const TrainConfig& config, const Dataset& dataset,
                  const TrainOptions& options = {});

// Examples used for per-step loss/accuracy: all of them up to this cap,
// otherwise an evenly strided subset.
inline constexpr std::size_t kMaxEvalExamples = 4096;

}  // namespace dpdr

#endif  // DPDR_TRAINERS_H_

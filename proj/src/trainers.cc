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

#include "dpdr/trainers.h"

#include <chrono>
#include <cmath>
#include <limits>

#include "dpdr/errors.h"
#include "dpdr/rng.h"

namespace dpdr {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double MedianNorm(std::span<const LayeredVector> vs) {
  if (vs.empty()) return kNaN;
  std::vector<double> norms;
  norms.reserve(vs.size());
  for (const LayeredVector& v : vs) norms.push_back(L2Norm(v));
  return Median(std::move(norms));
}

double MedianDiffNorm(std::span<const LayeredVector> grads,
                      const LayeredVector* prev) {
  if (grads.empty() || prev == nullptr) return kNaN;
  std::vector<double> norms;
  norms.reserve(grads.size());
  for (const LayeredVector& g : grads) {
    norms.push_back(L2Norm(Subtract(g, *prev)));
  }
  return Median(std::move(norms));
}

// Step-local telemetry shared by every method; the train loop fills loss,
// accuracy, cosine and epsilon.
MetricsRow BaseRow(std::span<const LayeredVector> grads,
                   const StepContext& ctx) {
  MetricsRow row;
  row.step = ctx.step;
  row.grad_norm_median = MedianNorm(grads);
  row.perp_norm_median = kNaN;
  row.diff_norm_median = MedianDiffNorm(grads, ctx.prev_release);
  row.alpha_vec_norm = kNaN;
  row.cos_prev = kNaN;
  row.perp_ratio_median = kNaN;
  return row;
}

std::vector<LayeredVector> Gradients(const Model& model, const Batch& batch) {
  if (batch.empty()) return {};
  return PerSampleGradients(model, batch);
}

// Noise-only release for an empty Poisson batch, normalized by the expected
// batch size.
LayeredVector EmptyBatchRelease(const std::vector<std::size_t>& dims,
                                double c, double sigma, RngStream& stream,
                                std::int64_t expected_batch) {
  LayeredVector noise = GaussianSample(stream, dims, sigma * c);
  for (double& v : noise.mutable_values()) {
    v /= static_cast<double>(expected_batch);
  }
  return noise;
}

StreamId NoiseStream(const StepContext& ctx, StreamTag tag) {
  return {ctx.step, tag, -1};
}

std::vector<std::size_t> EvalIndices(std::size_t n) {
  std::vector<std::size_t> idx;
  if (n <= kMaxEvalExamples) {
    for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
  } else {
    for (std::size_t i = 0; i < kMaxEvalExamples; ++i) {
      idx.push_back(i * n / kMaxEvalExamples);
    }
  }
  return idx;
}

}  // namespace

const char* MethodName(Method m) {
  switch (m) {
    case Method::kSgd:
      return "sgd";
    case Method::kDpsgd:
      return "dpsgd";
    case Method::kDiff:
      return "diff";
    case Method::kDpdr:
      return "dpdr";
  }
  return "unknown";
}

Method ParseMethod(const std::string& name) {
  if (name == "sgd") return Method::kSgd;
  if (name == "dpsgd") return Method::kDpsgd;
  if (name == "diff") return Method::kDiff;
  if (name == "dpdr") return Method::kDpdr;
  throw ConfigError("unknown method '" + name +
                    "' (expected sgd, dpsgd, diff or dpdr)");
}

void TrainConfig::Validate(std::size_t dataset_size) const {
  if (total_steps < 1) throw ContractViolation("total_steps must be >= 1");
  if (batch < 1 || static_cast<std::size_t>(batch) > dataset_size) {
    throw ContractViolation("batch must lie in [1, dataset size]");
  }
  if (!(lr > 0.0)) throw ContractViolation("lr must be positive");
  if (method == Method::kDpdr &&
      (switch_step < 1 || switch_step > total_steps)) {
    throw ContractViolation("switch_step must lie in [1, total_steps]");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ContractViolation("delta must lie in (0, 1)");
  }
  clip.Validate();
  noise.Validate();
}

StepOutcome SgdStep(const Model& model, const Batch& batch,
                    const StepContext& ctx) {
  const std::vector<LayeredVector> grads = Gradients(model, batch);
  LayeredVector released = grads.empty()
                               ? LayeredVector(model.parameters().layer_dims())
                               : Mean(grads);
  StepOutcome out{released, ApplyUpdate(model, released, ctx.lr),
                  BaseRow(grads, ctx), std::nullopt, {}};
  return out;
}

StepOutcome DpsgdStep(const Model& model, const Batch& batch, double c_g,
                      double sigma_g, const StepContext& ctx) {
  const std::vector<LayeredVector> grads = Gradients(model, batch);
  RngStream noise(ctx.seed, NoiseStream(ctx, StreamTag::kGradientNoise));
  LayeredVector released =
      grads.empty()
          ? EmptyBatchRelease(model.parameters().layer_dims(), c_g, sigma_g,
                              noise, ctx.expected_batch)
          : AggregateAndPerturb(grads, c_g, sigma_g, noise);
  StepOutcome out{released, ApplyUpdate(model, released, ctx.lr),
                  BaseRow(grads, ctx), ReleaseEvent{ctx.q, sigma_g, 1}, {}};
  return out;
}

StepOutcome DiffStep(const Model& model, const Batch& batch,
                     const LayeredVector& prev_release, double c_d,
                     double sigma_d, const StepContext& ctx) {
  CheckSameShape(prev_release, model.parameters());
  const std::vector<LayeredVector> grads = Gradients(model, batch);
  std::vector<LayeredVector> diffs;
  diffs.reserve(grads.size());
  for (const LayeredVector& g : grads) {
    diffs.push_back(Subtract(g, prev_release));
  }
  RngStream noise(ctx.seed, NoiseStream(ctx, StreamTag::kGradientNoise));
  const LayeredVector perturbed =
      diffs.empty()
          ? EmptyBatchRelease(prev_release.layer_dims(), c_d, sigma_d, noise,
                              ctx.expected_batch)
          : AggregateAndPerturb(diffs, c_d, sigma_d, noise);
  LayeredVector released = Add(perturbed, prev_release);
  MetricsRow row = BaseRow(grads, ctx);
  row.diff_norm_median = MedianNorm(diffs);
  StepOutcome out{released, ApplyUpdate(model, released, ctx.lr), row,
                  ReleaseEvent{ctx.q, sigma_d, 1}, {}};
  return out;
}

std::pair<StepOutcome, GdrBase> GdrStep(const Model& model, const Batch& batch,
                                        const GdrBase& base,
                                        const ClipSpec& clip,
                                        const NoisePlan& noise,
                                        const StepContext& ctx) {
  CheckSameShape(base.b, model.parameters());
  const std::vector<LayeredVector> grads = Gradients(model, batch);
  const std::vector<Decomposition> parts = DecomposeBatch(grads, base);
  std::vector<LayeredVector> perps;
  std::vector<std::vector<double>> alphas;
  perps.reserve(parts.size());
  alphas.reserve(parts.size());
  for (const Decomposition& d : parts) {
    perps.push_back(d.g_perp);
    alphas.push_back(d.alphas);
  }

  RngStream perp_noise(ctx.seed, NoiseStream(ctx, StreamTag::kPerpNoise));
  RngStream alpha_noise(ctx.seed, NoiseStream(ctx, StreamTag::kAlphaNoise));
  const std::size_t m = base.b.layer_count();
  LayeredVector perp_tilde(base.b.layer_dims());
  std::vector<double> alpha_tilde(m, 0.0);
  if (parts.empty()) {
    perp_tilde = EmptyBatchRelease(base.b.layer_dims(), clip.c_perp,
                                   noise.sigma_perp, perp_noise,
                                   ctx.expected_batch);
    alpha_tilde = GaussianSample(alpha_noise, m,
                                 noise.sigma_alpha * clip.c_alpha);
    for (double& a : alpha_tilde) a /= static_cast<double>(ctx.expected_batch);
  } else {
    perp_tilde = AggregateAndPerturb(perps, clip.c_perp, noise.sigma_perp,
                                     perp_noise);
    alpha_tilde = AggregateAndPerturbScalars(alphas, clip.c_alpha,
                                             noise.sigma_alpha, alpha_noise);
  }
  LayeredVector released = Reconstruct(alpha_tilde, perp_tilde, base);

  MetricsRow row = BaseRow(grads, ctx);
  std::vector<double> perp_norms;
  perp_norms.reserve(perps.size());
  for (const LayeredVector& p : perps) perp_norms.push_back(L2Norm(p));
  if (!perp_norms.empty()) {
    row.perp_norm_median = Median(perp_norms);
    std::vector<double> ratios;
    for (std::size_t i = 0; i < grads.size(); ++i) {
      const double g = L2Norm(grads[i]);
      ratios.push_back(g > 0.0 ? perp_norms[i] / g : 0.0);
    }
    row.perp_ratio_median = Median(std::move(ratios));
  }
  double alpha_sq = 0.0;
  for (double a : alpha_tilde) alpha_sq += a * a;
  row.alpha_vec_norm = std::sqrt(alpha_sq);

  const double sigma_eff =
      noise.sigma_perp > 0.0 && noise.sigma_alpha > 0.0
          ? EffectiveSigma(noise.sigma_perp, noise.sigma_alpha)
          : 0.0;
  GdrBase next = NormalizeBase(released, ctx.step);
  StepOutcome out{released, ApplyUpdate(model, released, ctx.lr), row,
                  ReleaseEvent{ctx.q, sigma_eff, 1}, std::move(perp_norms)};
  return {std::move(out), std::move(next)};
}

std::vector<SchedulePhase> ScheduleFor(const TrainConfig& config,
                                       std::size_t dataset_size) {
  const double q = config.SamplingRatio(dataset_size);
  switch (config.method) {
    case Method::kSgd:
      return {};
    case Method::kDpsgd:
    case Method::kDiff:
      return {{q, config.total_steps, PhaseRole::kDpsgd}};
    case Method::kDpdr:
      return DpdrSchedule(q, config.total_steps, config.switch_step);
  }
  return {};
}

NoisePlan ResolveNoise(const TrainConfig& config, std::size_t dataset_size,
                       std::optional<CalibrationResult>* calibration) {
  if (!config.privacy.has_value() || config.method == Method::kSgd) {
    return config.noise;
  }
  const PrivacyTarget& p = *config.privacy;
  const std::vector<SchedulePhase> schedule = ScheduleFor(config, dataset_size);
  const CalibrationResult r =
      CalibrateSigma(p.eps, p.delta, schedule, p.sigma_alpha, p.ratio_g);
  if (calibration != nullptr) *calibration = r;
  return {r.sigma_g, r.sigma_perp, r.sigma_alpha};
}

TrainResult Train(const TrainConfig& config_in, const Dataset& dataset,
                  const TrainOptions& options) {
  TrainConfig config = config_in;
  if (config.privacy.has_value()) {
    config.noise = ResolveNoise(config, dataset.size());
    config.delta = config.privacy->delta;
  }
  config.Validate(dataset.size());
  if (config.arch.d_in != dataset.d_in() ||
      config.arch.n_classes != dataset.n_classes()) {
    throw ContractViolation("model architecture " + config.arch.Describe() +
                            " does not fit the dataset");
  }

  const bool is_private = config.method != Method::kSgd;
  const double q = config.SamplingRatio(dataset.size());
  const std::vector<std::size_t> eval_idx = EvalIndices(dataset.size());
  const Batch eval_batch = dataset.Subset(eval_idx);

  TrainResult result{InitModel(config.arch, config.seed), {}, std::nullopt,
                     config.noise, {}, 0.0, 0.0, std::nullopt, {}, {}};
  if (is_private) result.ledger.emplace(config.delta);

  std::optional<GdrBase> base;
  LayeredVector prev_release(result.model.parameters().layer_dims());
  bool have_prev = false;
  const auto t_start = std::chrono::steady_clock::now();

  for (std::int64_t t = 1; t <= config.total_steps; ++t) {
    RngStream sampler(config.seed, {t, StreamTag::kBatchSampling, -1});
    const std::vector<std::size_t> idx =
        PoissonSampleIndices(dataset.size(), q, sampler);
    const Batch batch = dataset.Subset(idx);
    const StepContext ctx{config.seed, t,     config.lr, q, config.batch,
                          have_prev ? &prev_release : nullptr};

    StepOutcome out = [&]() -> StepOutcome {
      switch (config.method) {
        case Method::kSgd:
          return SgdStep(result.model, batch, ctx);
        case Method::kDpsgd:
          ++result.phases.dpsgd;
          return DpsgdStep(result.model, batch, config.clip.c_g,
                           config.noise.sigma_g, ctx);
        case Method::kDiff:
          ++result.phases.dpsgd;
          return DiffStep(result.model, batch, prev_release, config.clip.c_g,
                          config.noise.sigma_g, ctx);
        case Method::kDpdr:
          break;
      }
      if (t == 1) {
        // The first release also seeds the decomposition base.
        ++result.phases.first;
        StepOutcome o = DpsgdStep(result.model, batch, config.clip.c_g,
                                  config.noise.sigma_g, ctx);
        base = NormalizeBase(o.released, t);
        return o;
      }
      if (t <= config.switch_step) {
        ++result.phases.gdr;
        auto [o, next] =
            GdrStep(result.model, batch, *base, config.clip, config.noise, ctx);
        base = std::move(next);
        return std::move(o);
      }
      ++result.phases.dpsgd;
      return DpsgdStep(result.model, batch, config.clip.c_g,
                       config.noise.sigma_g, ctx);
    }();

    MetricsRow row = out.metrics;
    if (have_prev) {
      const CoherenceStats c = ComputeCoherence(prev_release, out.released);
      row.cos_prev = c.cosine;
    }
    if (out.event.has_value()) {
      result.ledger->Append(*out.event);
      row.eps_cum = result.ledger->ToEpsDelta().eps;
    }
    result.model = out.model;
    row.train_loss = Loss(result.model, eval_batch);
    row.train_accuracy = Accuracy(result.model, eval_batch);
    if (options.record_timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
    }
    if (!out.perp_norms.empty()) result.perp_snapshot = out.perp_norms;
    prev_release = out.released;
    have_prev = true;
    if (options.keep_releases) {
      result.releases.push_back(std::move(out.released));
    }
    result.metrics.push_back(row);
  }

  const Batch all = dataset.AsBatch();
  result.final_loss = Loss(result.model, all);
  result.final_accuracy = Accuracy(result.model, all);
  if (result.ledger.has_value()) result.privacy = result.ledger->ToEpsDelta();
  return result;
}

}  // namespace dpdr

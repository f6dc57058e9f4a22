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

#ifndef DPDR_EXPERIMENT_H_
#define DPDR_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "dpdr/dataset.h"
#include "dpdr/trainers.h"

namespace dpdr {

// Where the training examples come from.
struct DatasetSpec {
  enum class Kind { kSynthetic, kIdx, kCache };
  Kind kind = Kind::kSynthetic;
  // synthetic
  std::size_t n = 0;
  int d_in = 0;
  int n_classes = 2;
  double margin = 1.0;
  std::uint64_t data_seed = 0;
  // idx / cache
  std::string images_path;
  std::string labels_path;
  std::string cache_path;
  std::optional<std::size_t> limit;
};

struct ExperimentConfig {
  TrainConfig train;
  DatasetSpec dataset;
};

// Parses and validates a config document. Every key is checked: unknown or
// missing keys raise ConfigError naming the key.
ExperimentConfig ParseConfig(const nlohmann::json& doc);
ExperimentConfig ParseConfigText(const std::string& text);
ExperimentConfig LoadConfigFile(const std::string& path);

// Config document; with a resolved noise plan this re-runs identically.
nlohmann::json ConfigToJson(const ExperimentConfig& config);

Dataset LoadDataset(const DatasetSpec& spec);

struct RunArtifacts {
  std::filesystem::path metrics_csv;
  std::filesystem::path summary_json;
  std::filesystem::path perp_snapshot;  // empty when no GDR step ran
  nlohmann::json summary;
  TrainResult result;
};

struct RunOptions {
  bool record_timing = false;
};

// Calibrates (if requested), trains, and writes metrics.csv, summary.json and
// (for GDR runs) perp_snapshot.txt into out_dir. Files are written to a
// temporary name and renamed into place.
RunArtifacts RunExperiment(const ExperimentConfig& config,
                           const std::filesystem::path& out_dir,
                           const RunOptions& options = {});

inline constexpr const char* kMetricsHeader =
    "step,train_loss,train_accuracy,grad_norm_median,perp_norm_median,"
    "diff_norm_median,alpha_vec_norm,cos_prev,eps_cum,wall_ms";

std::string MetricsCsv(const std::vector<MetricsRow>& rows);

// First step whose trailing mean loss (window of up to 5 steps) falls below
// `target`, or nullopt when it never does.
inline constexpr int kLossWindow = 5;
std::optional<std::int64_t> StepsToTargetLoss(
    const std::vector<MetricsRow>& rows, double target);

// Command line entry point; returns the process exit code:
// 0 ok, 2 usage/config error, 3 infeasible budget, 4 dataset I/O,
// 5 partial comparison failure.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace dpdr

#endif  // DPDR_EXPERIMENT_H_

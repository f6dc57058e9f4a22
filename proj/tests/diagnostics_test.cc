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

#include "dpdr/diagnostics.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dpdr/errors.h"
#include "dpdr/trainers.h"
#include "test_util.h"

namespace dpdr {
namespace {

TEST(CoherenceTest, HandCases) {
  const CoherenceStats same =
      ComputeCoherence(LayeredVector({2}, {1, 0}), LayeredVector({2}, {1, 0}));
  EXPECT_DOUBLE_EQ(same.cosine, 1.0);
  EXPECT_DOUBLE_EQ(same.norm_ratio, 0.0);
  EXPECT_FALSE(same.degenerate);

  const CoherenceStats ortho = ComputeCoherence(
      LayeredVector({2}, {1, 0}), LayeredVector({2}, {0, std::sqrt(2.0)}));
  EXPECT_NEAR(ortho.cosine, 0.0, 1e-15);
  EXPECT_NEAR(ortho.norm_ratio, std::sqrt(1.5), 1e-15);

  const CoherenceStats flipped = ComputeCoherence(
      LayeredVector({1, 1}, {1, -2}), LayeredVector({1, 1}, {-1, 2}));
  EXPECT_DOUBLE_EQ(flipped.cosine, -1.0);
  EXPECT_DOUBLE_EQ(flipped.norm_ratio, 2.0);

  const CoherenceStats zero =
      ComputeCoherence(LayeredVector({2}), LayeredVector({2}, {1, 1}));
  EXPECT_TRUE(zero.degenerate);
  EXPECT_DOUBLE_EQ(zero.norm_ratio, 1.0);
}

TEST(QuantileTest, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(Median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(Median({4, 1, 2, 3}), 2.5);
  EXPECT_DOUBLE_EQ(Quantile({0, 10}, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(Quantile({5}, 0.9), 5.0);
  const Quantiles q = Summarize({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  EXPECT_DOUBLE_EQ(q.p10, 1.0);
  EXPECT_DOUBLE_EQ(q.median, 5.0);
  EXPECT_DOUBLE_EQ(q.p90, 9.0);
  EXPECT_THROW(Median({}), ContractViolation);
  EXPECT_THROW(Quantile({1.0}, 1.5), ContractViolation);
}

TEST(SensitivityProbeTest, ParallelGradientsHaveNoPerp) {
  const GdrBase base = NormalizeBase(LayeredVector({3}, {1, 2, 2}), 1);
  std::vector<LayeredVector> gs = {LayeredVector({3}, {2, 4, 4}),
                                   LayeredVector({3}, {-1, -2, -2})};
  const SensitivityRecord r = SensitivityProbe(gs, base, 0.5);
  EXPECT_NEAR(r.perp_norm.median, 0.0, 1e-14);
  EXPECT_NEAR(r.perp_ratio.p90, 0.0, 1e-14);
  EXPECT_NEAR(r.grad_norm.median, 4.5, 1e-14);
  ASSERT_EQ(r.alpha_abs_median.size(), 1u);
  EXPECT_NEAR(r.alpha_abs_median[0], 4.5, 1e-14);
  EXPECT_EQ(r.w_step_norm, 0.5);
  EXPECT_EQ(r.perp_norms.size(), 2u);
}

TEST(SensitivityProbeTest, DegenerateBaseKeepsFullNorm) {
  const GdrBase base = NormalizeBase(LayeredVector({2}), 1);
  std::vector<LayeredVector> gs = {LayeredVector({2}, {3, 4})};
  const SensitivityRecord r = SensitivityProbe(gs, base, 0.0);
  EXPECT_DOUBLE_EQ(r.perp_norm.median, 5.0);
  EXPECT_DOUBLE_EQ(r.perp_ratio.median, 1.0);
  EXPECT_THROW(SensitivityProbe(std::span<const LayeredVector>(), base, 0.0),
               ContractViolation);
}

TEST(SensitivityProbeTest, RatioNeverExceedsOne) {
  RngStream rng(61, {});
  const std::vector<std::size_t> dims = {6, 4};
  const GdrBase base = NormalizeBase(testing::RandomVector(dims, rng), 1);
  std::vector<LayeredVector> gs;
  for (int i = 0; i < 40; ++i) gs.push_back(testing::RandomVector(dims, rng));
  const SensitivityRecord r = SensitivityProbe(gs, base, 0.0);
  EXPECT_LE(r.perp_ratio.p90, 1.0 + 1e-12);
  EXPECT_LE(r.perp_ratio.p10, r.perp_ratio.median);
  EXPECT_LE(r.perp_ratio.median, r.perp_ratio.p90);
}

TEST(HistogramTest, ConstantList) {
  const std::vector<double> v(7, 2.5);
  const auto h = Histogram(v, 3);
  ASSERT_EQ(h.size(), 3u);
  EXPECT_EQ(h[0].count, 7u);
  EXPECT_DOUBLE_EQ(h[0].edge, 2.5);
  EXPECT_DOUBLE_EQ(h[1].edge, 3.5);
}

TEST(HistogramTest, EqualWidthBins) {
  const std::vector<double> v = {0, 1, 2, 3};
  const auto h = Histogram(v, 2);
  EXPECT_EQ(h[0].count, 2u);
  EXPECT_EQ(h[1].count, 2u);
  EXPECT_DOUBLE_EQ(h[1].edge, 1.5);
  EXPECT_THROW(Histogram(v, 0), ContractViolation);
}

TEST(HistogramTest, NormalSampleInterquartileRange) {
  RngStream rng(62, {});
  std::vector<double> v(20000);
  for (double& x : v) x = rng.NextGaussian();
  const double iqr = Quantile(v, 0.75) - Quantile(v, 0.25);
  EXPECT_LT(std::abs(iqr - 1.349) / 1.349, 0.05);
  const auto h = Histogram(v, 20);
  std::size_t total = 0;
  std::size_t peak = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    total += h[i].count;
    if (h[i].count > h[peak].count) peak = i;
  }
  EXPECT_EQ(total, v.size());
  EXPECT_LT(std::abs(h[peak].edge), 1.0);
}

TEST(CoherenceTest, FullBatchGradientDescentStaysAligned) {
  const Dataset d = GenSynthetic(300, 5, 2, 3.0, 2);
  TrainConfig config;
  config.method = Method::kSgd;
  config.total_steps = 40;
  config.switch_step = 40;
  config.batch = 300;
  config.lr = 0.1;
  config.seed = 4;
  config.arch = Architecture::LogisticRegression(5, 2);
  const TrainResult r = Train(config, d);
  ASSERT_EQ(r.metrics.size(), 40u);
  EXPECT_TRUE(std::isnan(r.metrics[0].cos_prev));
  for (std::size_t i = 1; i < r.metrics.size(); ++i) {
    EXPECT_GE(r.metrics[i].cos_prev, 0.0) << i;
  }
}

}  // namespace
}  // namespace dpdr

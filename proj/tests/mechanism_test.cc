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

#include "dpdr/mechanism.h"

#include <cmath>

#include <gtest/gtest.h>

#include "dpdr/errors.h"
#include "test_util.h"

namespace dpdr {
namespace {

using testing::RandomVector;
using testing::RelErr;

TEST(MechanismTest, ClipToNormScalesDown) {
  EXPECT_EQ(ClipToNorm(LayeredVector({2}, {0, 2}), 1.0),
            LayeredVector({2}, {0, 1}));
  const LayeredVector small({1, 1}, {0.3, 0.4});
  EXPECT_EQ(ClipToNorm(small, 1.0), small);
  EXPECT_EQ(ClipToNorm(LayeredVector({3}), 1.0), LayeredVector({3}));
  EXPECT_THROW(ClipToNorm(small, 0.0), ContractViolation);
  EXPECT_THROW(ClipToNorm(small, -1.0), ContractViolation);
}

TEST(MechanismTest, ClipToNormUsesGlobalNorm) {
  // Each layer alone is within the bound; jointly the norm is 5.
  const LayeredVector v({1, 1}, {3, 4});
  const LayeredVector c = ClipToNorm(v, 4.0);
  EXPECT_NEAR(L2Norm(c), 4.0, 1e-15);
}

TEST(MechanismTest, ClipAlphaVecKeepsSigns) {
  const std::vector<double> a = ClipAlphaVec(std::vector<double>{3, 4}, 1.0);
  EXPECT_NEAR(a[0], 0.6, 1e-15);
  EXPECT_NEAR(a[1], 0.8, 1e-15);
  const std::vector<double> b = ClipAlphaVec(std::vector<double>{-3, 4}, 1.0);
  EXPECT_NEAR(b[0], -0.6, 1e-15);
  EXPECT_NEAR(b[1], 0.8, 1e-15);
  const std::vector<double> in = {0.1, -0.2};
  EXPECT_EQ(ClipAlphaVec(in, 1.0), in);
  EXPECT_THROW(ClipAlphaVec(in, 0.0), ContractViolation);
}

TEST(MechanismTest, PropertyClipIdempotentAndDirectionPreserving) {
  RngStream rng(31, {});
  for (int trial = 0; trial < 500; ++trial) {
    const LayeredVector v = RandomVector({7, 3}, rng, 3.0);
    const double c = 0.1 + 5.0 * rng.NextUniform();
    const LayeredVector once = ClipToNorm(v, c);
    EXPECT_LE(RelErr(ClipToNorm(once, c), once), 1e-15);
    EXPECT_LE(L2Norm(once), c * (1 + 1e-15));
    EXPECT_LE(L2Norm(once), L2Norm(v));
    const double cosine = Dot(v, once) / (L2Norm(v) * L2Norm(once));
    EXPECT_NEAR(cosine, 1.0, 1e-12);
  }
}

TEST(MechanismTest, ZeroNoiseIsMeanOfClipped) {
  RngStream rng(32, {});
  std::vector<LayeredVector> gs;
  for (int i = 0; i < 9; ++i) gs.push_back(RandomVector({4, 2}, rng, 2.0));
  RngStream noise(1, {});
  const LayeredVector got = AggregateAndPerturb(gs, 1.5, 0.0, noise);
  LayeredVector oracle({4, 2});
  for (const auto& g : gs) {
    const double n = L2Norm(g);
    const double s = n > 1.5 ? 1.5 / n : 1.0;
    for (std::size_t j = 0; j < oracle.total_dim(); ++j) oracle[j] += s * g[j];
  }
  for (std::size_t j = 0; j < oracle.total_dim(); ++j) oracle[j] /= 9.0;
  EXPECT_LE(RelErr(got, oracle), 1e-12);
}

TEST(MechanismTest, ZeroNoiseWithinBoundIsPlainMean) {
  std::vector<LayeredVector> gs = {LayeredVector({2}, {0.1, 0.2}),
                                   LayeredVector({2}, {0.3, -0.2})};
  RngStream noise(1, {});
  EXPECT_EQ(AggregateAndPerturb(gs, 1.0, 0.0, noise),
            LayeredVector({2}, {0.2, 0.0}));
  std::vector<LayeredVector> one = {LayeredVector({2}, {0.0, 2.0})};
  EXPECT_EQ(AggregateAndPerturb(one, 1.0, 0.0, noise),
            LayeredVector({2}, {0.0, 1.0}));
  EXPECT_THROW(AggregateAndPerturb(std::span<const LayeredVector>(), 1.0, 0.0,
                                   noise),
               ContractViolation);
}

TEST(MechanismTest, PerturbationIsDeterministicPerStream) {
  std::vector<LayeredVector> gs = {LayeredVector({3}, {1, 2, 3})};
  RngStream a(9, {4, StreamTag::kGradientNoise, -1});
  RngStream b(9, {4, StreamTag::kGradientNoise, -1});
  EXPECT_EQ(AggregateAndPerturb(gs, 1.0, 1.3, a),
            AggregateAndPerturb(gs, 1.0, 1.3, b));
}

TEST(MechanismTest, NoiseStdIsSigmaCOverB) {
  // B = 4, sigma = 1, c = 2: per-coordinate std should be 0.5.
  std::vector<LayeredVector> gs(4, LayeredVector({1}, {0.25}));
  const double clipped_mean = 0.25;
  double sum = 0.0, sq = 0.0;
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    RngStream s(77, {r, StreamTag::kTest, -1});
    const double e = AggregateAndPerturb(gs, 2.0, 1.0, s)[0] - clipped_mean;
    sum += e;
    sq += e * e;
  }
  const double sd = std::sqrt((sq - sum * sum / reps) / (reps - 1));
  EXPECT_LT(std::abs(sd - 0.5) / 0.5, 0.03);
}

TEST(MechanismTest, ScalarAggregation) {
  std::vector<std::vector<double>> alphas = {{0.5}, {1.5}};
  RngStream s(1, {});
  const auto got = AggregateAndPerturbScalars(alphas, 1.0, 0.0, s);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_DOUBLE_EQ(got[0], 0.75);

  std::vector<std::vector<double>> within = {{0.1, 0.2}, {0.3, 0.0}};
  const auto mean = AggregateAndPerturbScalars(within, 1.0, 0.0, s);
  EXPECT_DOUBLE_EQ(mean[0], 0.2);
  EXPECT_DOUBLE_EQ(mean[1], 0.1);

  std::vector<std::vector<double>> ragged = {{0.1}, {0.1, 0.2}};
  EXPECT_THROW(AggregateAndPerturbScalars(ragged, 1.0, 0.0, s),
               ContractViolation);
}

TEST(MechanismTest, ScalarNoiseStdIsSigmaCOverB) {
  std::vector<std::vector<double>> alphas(4, std::vector<double>{0.0, 0.0});
  double sum = 0.0, sq = 0.0;
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    RngStream s(78, {r, StreamTag::kTest, -1});
    const double e = AggregateAndPerturbScalars(alphas, 2.0, 1.0, s)[1];
    sum += e;
    sq += e * e;
  }
  const double sd = std::sqrt((sq - sum * sum / reps) / (reps - 1));
  EXPECT_LT(std::abs(sd - 0.5) / 0.5, 0.03);
}

TEST(MechanismTest, SpecsValidate) {
  EXPECT_NO_THROW((ClipSpec{1, 1, 1}.Validate()));
  EXPECT_THROW((ClipSpec{1, 0, 1}.Validate()), ContractViolation);
  EXPECT_NO_THROW((NoisePlan{0, 0, 0}.Validate()));
  EXPECT_THROW((NoisePlan{-1, 0, 0}.Validate()), ContractViolation);
}

}  // namespace
}  // namespace dpdr

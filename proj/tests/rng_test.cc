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

#include "dpdr/rng.h"

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "dpdr/errors.h"

namespace dpdr {
namespace {

// Published known-answer vectors for Philox4x32-10 (Random123 kat_vectors).
TEST(RngTest, PhiloxKnownAnswers) {
  EXPECT_EQ(Philox4x32({0, 0, 0, 0}, {0, 0}),
            (std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c,
                                          0x9b00dbd8}));
  EXPECT_EQ(Philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                       {0xffffffff, 0xffffffff}),
            (std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6,
                                          0x6d5451fd}));
  EXPECT_EQ(Philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                       {0xa4093822, 0x299f31d0}),
            (std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420,
                                          0x24126ea1}));
}

TEST(RngTest, ReplayIsBitIdentical) {
  const StreamId id{7, StreamTag::kGradientNoise, -1};
  RngStream a(42, id);
  RngStream b(42, id);
  const LayeredVector va = GaussianSample(a, {100, 3}, 1.5);
  const LayeredVector vb = GaussianSample(b, {100, 3}, 1.5);
  EXPECT_EQ(va, vb);
}

TEST(RngTest, DrawOrderAcrossStreamsDoesNotMatter) {
  const StreamId s1{1, StreamTag::kPerpNoise, -1};
  const StreamId s2{1, StreamTag::kAlphaNoise, -1};
  RngStream a1(5, s1), a2(5, s2);
  const double x1 = a1.NextGaussian();
  const double x2 = a2.NextGaussian();
  RngStream b2(5, s2), b1(5, s1);
  EXPECT_EQ(b2.NextGaussian(), x2);
  EXPECT_EQ(b1.NextGaussian(), x1);
}

TEST(RngTest, ZeroStdGivesZeroVector) {
  RngStream s(1, {});
  EXPECT_EQ(GaussianSample(s, {4, 2}, 0.0), LayeredVector({4, 2}));
  EXPECT_THROW(GaussianSample(s, {4}, -1.0), ContractViolation);
}

TEST(RngTest, GaussianMomentsAtStdTwo) {
  RngStream s(2024, {0, StreamTag::kTest, 3});
  const LayeredVector v = GaussianSample(s, std::vector<std::size_t>{10000}, 2.0);
  double mean = 0.0;
  for (double x : v.values()) mean += x;
  mean /= 10000.0;
  double var = 0.0;
  for (double x : v.values()) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / 9999.0);
  EXPECT_LT(std::abs(mean), 0.05);
  EXPECT_LT(std::abs(sd - 2.0) / 2.0, 0.03);
}

TEST(RngTest, DistinctStreamsAreUncorrelated) {
  const std::uint64_t seed = 99;
  const std::vector<StreamId> ids = {{1, StreamTag::kGradientNoise, -1},
                                     {2, StreamTag::kGradientNoise, -1},
                                     {1, StreamTag::kPerpNoise, -1},
                                     {1, StreamTag::kGradientNoise, 0}};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      RngStream a(seed, ids[i]), b(seed, ids[j]);
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      const int n = 10000;
      for (int k = 0; k < n; ++k) {
        const double x = a.NextGaussian(), y = b.NextGaussian();
        sa += x, sb += y, saa += x * x, sbb += y * y, sab += x * y;
      }
      const double cov = sab / n - (sa / n) * (sb / n);
      const double r = cov / std::sqrt((saa / n - sa * sa / n / n) *
                                       (sbb / n - sb * sb / n / n));
      EXPECT_LT(std::abs(r), 0.05) << "streams " << i << " and " << j;
    }
  }
}

TEST(RngTest, UniformStaysInOpenInterval) {
  RngStream s(3, {});
  for (int i = 0; i < 100000; ++i) {
    const double u = s.NextUniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace dpdr

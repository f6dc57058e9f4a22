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

#include "dpdr/layered_vector.h"

#include <cmath>

#include <gtest/gtest.h>

#include "dpdr/errors.h"
#include "test_util.h"

namespace dpdr {
namespace {

using testing::RandomDims;
using testing::RandomVector;
using testing::RelErr;

// Kahan-compensated long double accumulation, independent of Dot's order.
long double CompensatedDot(const LayeredVector& a, const LayeredVector& b) {
  long double sum = 0.0L, c = 0.0L;
  for (std::size_t i = 0; i < a.total_dim(); ++i) {
    const long double y =
        static_cast<long double>(a[i]) * static_cast<long double>(b[i]) - c;
    const long double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

TEST(LayeredVectorTest, ShapeBookkeeping) {
  LayeredVector v({2, 3, 1});
  EXPECT_EQ(v.layer_count(), 3u);
  EXPECT_EQ(v.total_dim(), 6u);
  EXPECT_EQ(v.layer(1).size(), 3u);
  EXPECT_THROW(LayeredVector(std::vector<std::size_t>{}), ContractViolation);
  EXPECT_THROW(LayeredVector({2, 0}), ContractViolation);
  EXPECT_THROW(LayeredVector({2}, {1.0, 2.0, 3.0}), ContractViolation);
}

TEST(LayeredVectorTest, DotHandArithmetic) {
  LayeredVector a({3}, {1, 0, 2});
  LayeredVector b({3}, {3, 1, 0});
  EXPECT_EQ(Dot(a, b), 3.0);
  LayeredVector c({2}, {3, 4});
  EXPECT_EQ(Dot(c, c), 25.0);
}

TEST(LayeredVectorTest, DotRejectsShapeMismatch) {
  LayeredVector a({2, 1});
  LayeredVector b({1, 2});
  EXPECT_THROW(Dot(a, b), ContractViolation);
  EXPECT_THROW(Axpy(1.0, a, b), ContractViolation);
}

TEST(LayeredVectorTest, DotMatchesCompensatedOracle) {
  RngStream rng(11, {});
  for (int trial = 0; trial < 20; ++trial) {
    const LayeredVector a = RandomVector({40, 60}, rng);
    const LayeredVector b = RandomVector({40, 60}, rng);
    const double oracle = static_cast<double>(CompensatedDot(a, b));
    EXPECT_LE(RelErr(Dot(a, b), oracle), 1e-12);
  }
}

TEST(LayeredVectorTest, NormMatchesBruteForce) {
  RngStream rng(12, {});
  const LayeredVector a = RandomVector({500, 300, 200}, rng);
  long double sq = 0.0L;
  for (double x : a.values()) sq += static_cast<long double>(x) * x;
  EXPECT_LE(RelErr(L2Norm(a), static_cast<double>(std::sqrt(sq))), 1e-12);
  EXPECT_EQ(L2Norm(LayeredVector({2}, {3, 4})), 5.0);
  EXPECT_EQ(L2Norm(LayeredVector({7})), 0.0);
}

TEST(LayeredVectorTest, AxpyCases) {
  LayeredVector x({2}, {2, 4});
  LayeredVector y({2}, {1, 1});
  EXPECT_EQ(Axpy(0.0, x, y), y);
  EXPECT_EQ(Axpy(1.0, Scale(-1.0, y), y), LayeredVector({2}));
  EXPECT_EQ(Axpy(-0.5, x, y), LayeredVector({2}, {0, -1}));
}

TEST(LayeredVectorTest, PropertyDotIsSumOfLayerDots) {
  RngStream rng(13, {});
  for (int trial = 0; trial < 200; ++trial) {
    const auto dims = RandomDims(rng, 5, 30);
    const LayeredVector a = RandomVector(dims, rng);
    const LayeredVector b = RandomVector(dims, rng);
    double by_layer = 0.0;
    for (std::size_t l = 0; l < dims.size(); ++l) by_layer += DotLayer(a, b, l);
    EXPECT_LE(std::abs(Dot(a, b) - by_layer),
              1e-12 * std::max(1.0, L2Norm(a) * L2Norm(b)));
  }
}

TEST(LayeredVectorTest, PropertyNormIsHomogeneous) {
  RngStream rng(14, {});
  const LayeredVector zero({5, 5});
  for (int trial = 0; trial < 200; ++trial) {
    const LayeredVector x = RandomVector({5, 5}, rng);
    const double c = 10.0 * rng.NextGaussian();
    EXPECT_LE(RelErr(L2Norm(Axpy(c, x, zero)), std::abs(c) * L2Norm(x)),
              1e-12);
  }
}

TEST(LayeredVectorTest, MeanIsCoordinateWise) {
  std::vector<LayeredVector> vs = {LayeredVector({2}, {1, 2}),
                                   LayeredVector({2}, {3, 6})};
  EXPECT_EQ(Mean(vs), LayeredVector({2}, {2, 4}));
  EXPECT_THROW(Mean(std::span<const LayeredVector>()), ContractViolation);
}

}  // namespace
}  // namespace dpdr

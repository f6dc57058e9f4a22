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

#ifndef DPDR_RNG_H_
#define DPDR_RNG_H_

#include <array>
#include <cstdint>
#include <vector>

#include "dpdr/layered_vector.h"

namespace dpdr {

// Purposes a random stream can serve inside one training step. Distinct tags
// give disjoint streams, so batch sampling never shares randomness with noise.
enum class StreamTag : std::uint32_t {
  kBatchSampling = 1,
  kGradientNoise = 2,
  kPerpNoise = 3,
  kAlphaNoise = 4,
  kModelInit = 5,
  kDataGeneration = 6,
  kTest = 100,
};

struct StreamId {
  std::int64_t step = 0;
  StreamTag tag = StreamTag::kTest;
  // Sample index, or -1 for aggregate draws.
  std::int64_t sample = -1;
};

// Counter-based generator (Philox4x32-10). The value sequence is a pure
// function of (root_seed, id): replays are bit-identical whatever the
// execution order, and distinct ids give independent streams.
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, StreamId id);

  std::uint64_t NextU64();
  // Uniform on the open interval (0, 1).
  double NextUniform();
  // Standard normal via Box-Muller; both outputs of a pair are used.
  double NextGaussian();

 private:
  void Refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Single Philox4x32-10 block for the given counter and key.
std::array<std::uint32_t, 4> Philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// i.i.d. N(0, std^2) coordinates in the given shape. std == 0 yields the zero
// vector without consuming the stream; negative std is a contract violation.
LayeredVector GaussianSample(RngStream& stream,
                             const std::vector<std::size_t>& layer_dims,
                             double std);

std::vector<double> GaussianSample(RngStream& stream, std::size_t n,
                                   double std);

}  // namespace dpdr

#endif  // DPDR_RNG_H_

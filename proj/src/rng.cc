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
#include <numbers>

#include "dpdr/errors.h"

namespace dpdr {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t root_seed, StreamId id) {
  std::uint64_t k = SplitMix64(root_seed);
  k = SplitMix64(k ^ static_cast<std::uint64_t>(id.step));
  k = SplitMix64(k ^ static_cast<std::uint64_t>(id.tag));
  k = SplitMix64(k ^ static_cast<std::uint64_t>(id.sample));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

void RngStream::Refill() {
  block_ = Philox4x32({static_cast<std::uint32_t>(counter_),
                       static_cast<std::uint32_t>(counter_ >> 32), 0, 0},
                      key_);
  ++counter_;
  block_pos_ = 0;
}

std::uint64_t RngStream::NextU64() {
  if (block_pos_ >= 4) Refill();
  const std::uint64_t lo = block_[block_pos_];
  const std::uint64_t hi = block_[block_pos_ + 1];
  block_pos_ += 2;
  return (hi << 32) | lo;
}

double RngStream::NextUniform() {
  return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::NextGaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = NextUniform();
  const double u2 = NextUniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

LayeredVector GaussianSample(RngStream& stream,
                             const std::vector<std::size_t>& layer_dims,
                             double std) {
  if (!(std >= 0.0) || !std::isfinite(std)) {
    throw ContractViolation("gaussian sample std must be finite and >= 0");
  }
  LayeredVector out(layer_dims);
  if (std == 0.0) return out;
  for (double& v : out.mutable_values()) v = std * stream.NextGaussian();
  return out;
}

std::vector<double> GaussianSample(RngStream& stream, std::size_t n,
                                   double std) {
  if (!(std >= 0.0) || !std::isfinite(std)) {
    throw ContractViolation("gaussian sample std must be finite and >= 0");
  }
  std::vector<double> out(n, 0.0);
  if (std == 0.0) return out;
  for (double& v : out) v = std * stream.NextGaussian();
  return out;
}

}  // namespace dpdr

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

#include "dpdr/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <utility>

#include "dpdr/errors.h"

namespace dpdr {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::string Hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08X", v);
  return buf;
}

std::vector<std::uint8_t> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t ReadBigEndian32(const std::vector<std::uint8_t>& bytes,
                              std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw DataError(path + ": truncated header at byte offset " +
                    std::to_string(offset) + " (file has " +
                    std::to_string(bytes.size()) + " bytes)");
  }
  return (std::uint32_t{bytes[offset]} << 24) |
         (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) |
         std::uint32_t{bytes[offset + 3]};
}

void ExpectMagic(std::uint32_t got, std::uint32_t want,
                 const std::string& path) {
  if (got != want) {
    throw DataError(path + ": bad magic number " + Hex(got) +
                    " at byte offset 0, expected " + Hex(want));
  }
}

void CheckPayload(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                  std::size_t need, const std::string& path) {
  if (bytes.size() < offset + need) {
    throw DataError(path + ": truncated payload, expected " +
                    std::to_string(need) + " bytes from byte offset " +
                    std::to_string(offset) + " but data ends at byte offset " +
                    std::to_string(bytes.size()));
  }
}

std::vector<std::string> SplitCommas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T ParseNumber(const std::string& s, const std::string& where) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError(where + ": cannot parse number '" + s + "'");
  }
  return v;
}

}  // namespace

Dataset::Dataset(std::string name, int d_in, int n_classes,
                 std::vector<double> features, std::vector<int> labels)
    : name_(std::move(name)),
      d_in_(d_in),
      n_classes_(n_classes),
      features_(std::move(features)),
      labels_(std::move(labels)) {
  if (labels_.empty()) throw ContractViolation("dataset must be nonempty");
  if (d_in_ <= 0 || n_classes_ < 2) {
    throw ContractViolation("dataset needs d_in >= 1 and n_classes >= 2");
  }
  if (features_.size() != labels_.size() * static_cast<std::size_t>(d_in_)) {
    throw ContractViolation("dataset feature count does not match n * d_in");
  }
  for (int y : labels_) {
    if (y < 0 || y >= n_classes_) {
      throw ContractViolation("dataset label out of range");
    }
  }
}

Batch Dataset::AsBatch() const {
  Batch batch;
  batch.inputs.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) batch.inputs.push_back(input(i));
  batch.labels = labels_;
  return batch;
}

Batch Dataset::Subset(std::span<const std::size_t> indices) const {
  Batch batch;
  batch.inputs.reserve(indices.size());
  batch.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw ContractViolation("subset index out of range");
    batch.inputs.push_back(input(i));
    batch.labels.push_back(labels_[i]);
  }
  return batch;
}

Dataset LoadIdxPair(const std::string& images_path,
                    const std::string& labels_path,
                    std::optional<std::size_t> limit) {
  if (limit.has_value() && *limit == 0) {
    throw DataError("limit must be at least 1");
  }
  const std::vector<std::uint8_t> img = ReadFile(images_path);
  const std::vector<std::uint8_t> lab = ReadFile(labels_path);

  ExpectMagic(ReadBigEndian32(img, 0, images_path), kIdxImagesMagic,
              images_path);
  ExpectMagic(ReadBigEndian32(lab, 0, labels_path), kIdxLabelsMagic,
              labels_path);
  const std::size_t n_img = ReadBigEndian32(img, 4, images_path);
  const std::size_t rows = ReadBigEndian32(img, 8, images_path);
  const std::size_t cols = ReadBigEndian32(img, 12, images_path);
  const std::size_t n_lab = ReadBigEndian32(lab, 4, labels_path);
  if (n_img != n_lab) {
    throw DataError("count mismatch: " + images_path + " declares " +
                    std::to_string(n_img) + " images at byte offset 4 but " +
                    labels_path + " declares " + std::to_string(n_lab) +
                    " labels");
  }
  if (n_img == 0 || rows == 0 || cols == 0) {
    throw DataError(images_path + ": empty image set");
  }
  const std::size_t pixels = rows * cols;
  CheckPayload(img, 16, n_img * pixels, images_path);
  CheckPayload(lab, 8, n_lab, labels_path);

  const std::size_t n = limit.has_value() ? std::min(*limit, n_img) : n_img;
  std::vector<double> features(n * pixels);
  for (std::size_t i = 0; i < n * pixels; ++i) {
    features[i] = static_cast<double>(img[16 + i]) / 255.0;
  }
  std::vector<int> labels(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = lab[8 + i];
    max_label = std::max(max_label, labels[i]);
  }
  return Dataset("idx", static_cast<int>(pixels), std::max(max_label + 1, 2),
                 std::move(features), std::move(labels));
}

Dataset GenSynthetic(std::size_t n, int d_in, int n_classes, double margin,
                     std::uint64_t seed) {
  if (d_in <= 0 || n_classes < 2) {
    throw ContractViolation("synthetic data needs d_in >= 1, n_classes >= 2");
  }
  if (n < static_cast<std::size_t>(n_classes)) {
    throw ContractViolation("synthetic data needs n >= n_classes");
  }
  if (!(margin > 0.0)) throw ContractViolation("margin must be positive");

  const std::size_t k = static_cast<std::size_t>(n_classes);
  const std::size_t d = static_cast<std::size_t>(d_in);
  std::vector<double> centers(k * d, 0.0);
  if (k <= d) {
    // Regular simplex: (margin / sqrt 2) * (e_c - mean_j e_j).
    const double s = margin / std::sqrt(2.0);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < k; ++j) {
        centers[c * d + j] = s * ((c == j ? 1.0 : 0.0) - 1.0 / k);
      }
    }
  } else {
    // More classes than dimensions: random directions on a sphere large
    // enough that rejection sampling finds a valid packing quickly.
    RngStream stream(seed, {0, StreamTag::kDataGeneration, -2});
    double radius = margin * static_cast<double>(k);
    bool ok = false;
    while (!ok) {
      for (std::size_t c = 0; c < k; ++c) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          centers[c * d + j] = stream.NextGaussian();
          sq += centers[c * d + j] * centers[c * d + j];
        }
        const double norm = std::sqrt(sq);
        for (std::size_t j = 0; j < d; ++j) {
          centers[c * d + j] *= radius / norm;
        }
      }
      ok = true;
      for (std::size_t a = 0; a < k && ok; ++a) {
        for (std::size_t b = a + 1; b < k && ok; ++b) {
          double sq = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double diff = centers[a * d + j] - centers[b * d + j];
            sq += diff * diff;
          }
          ok = std::sqrt(sq) >= margin;
        }
      }
      radius *= 1.25;
    }
  }

  std::vector<double> features(n * d);
  std::vector<int> labels(n);
  RngStream stream(seed, {0, StreamTag::kDataGeneration, -1});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k;
    labels[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < d; ++j) {
      features[i * d + j] = centers[c * d + j] + stream.NextGaussian();
    }
  }
  return Dataset("synthetic", d_in, n_classes, std::move(features),
                 std::move(labels));
}

std::vector<std::size_t> PoissonSampleIndices(std::size_t n, double q,
                                              RngStream& stream) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw ContractViolation("sampling ratio must lie in [0, 1]");
  }
  std::vector<std::size_t> indices;
  for (std::size_t i = 0; i < n; ++i) {
    if (stream.NextUniform() < q) indices.push_back(i);
  }
  return indices;
}

Batch PoissonSample(const Dataset& dataset, double q, RngStream& stream) {
  const std::vector<std::size_t> idx =
      PoissonSampleIndices(dataset.size(), q, stream);
  return dataset.Subset(idx);
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void SaveCache(const Dataset& dataset, const std::string& path) {
  if (dataset.name().find_first_of(",\n") != std::string::npos) {
    throw ContractViolation("dataset name may not contain commas");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << dataset.name() << ',' << dataset.size() << ',' << dataset.d_in()
      << ',' << dataset.n_classes() << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.label(i);
    for (double v : dataset.input(i)) out << ',' << FormatDouble(v);
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

Dataset LoadCache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header");
  const std::vector<std::string> header = SplitCommas(line);
  if (header.size() != 4) {
    throw DataError(path + ":1: header must be name,n,d_in,n_classes");
  }
  const std::string where = path + ":1";
  const auto n = ParseNumber<std::size_t>(header[1], where);
  const auto d_in = ParseNumber<int>(header[2], where);
  const auto n_classes = ParseNumber<int>(header[3], where);
  if (n == 0 || d_in <= 0) throw DataError(where + ": empty dataset");

  std::vector<double> features;
  features.reserve(n * d_in);
  std::vector<int> labels;
  labels.reserve(n);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string at = path + ":" + std::to_string(line_no);
    const std::vector<std::string> cells = SplitCommas(line);
    if (cells.size() != static_cast<std::size_t>(d_in) + 1) {
      throw DataError(at + ": expected " + std::to_string(d_in + 1) +
                      " fields, found " + std::to_string(cells.size()));
    }
    const int y = ParseNumber<int>(cells[0], at);
    if (y < 0 || y >= n_classes) throw DataError(at + ": label out of range");
    labels.push_back(y);
    for (std::size_t j = 1; j < cells.size(); ++j) {
      features.push_back(ParseNumber<double>(cells[j], at));
    }
  }
  if (labels.size() != n) {
    throw DataError(path + ": header declares " + std::to_string(n) +
                    " rows, found " + std::to_string(labels.size()));
  }
  return Dataset(header[0], d_in, n_classes, std::move(features),
                 std::move(labels));
}

}  // namespace dpdr

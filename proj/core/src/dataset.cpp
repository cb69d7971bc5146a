// Copyright 2026 The uapkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "uap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "container.hpp"
#include "uap/error.hpp"
#include "uap/rng.hpp"

namespace uap {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarPixels = 3072;
constexpr std::size_t kCifarRecord = kCifarPixels + 1;

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at) {
  return (static_cast<std::uint32_t>(b[at]) << 24) | (static_cast<std::uint32_t>(b[at + 1]) << 16) |
         (static_cast<std::uint32_t>(b[at + 2]) << 8) | static_cast<std::uint32_t>(b[at + 3]);
}

void put_be32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((v >> s) & 0xffu));
}

float unit_pixel(unsigned char b) { return static_cast<float>(b / 255.0); }

void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace

const char* to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

Dataset::Dataset(std::string name, Split split, Shape sample_shape, std::vector<float> pixels,
                 std::vector<std::size_t> labels, std::size_t num_classes)
    : name_(std::move(name)),
      split_(split),
      sample_shape_(std::move(sample_shape)),
      pixels_(std::move(pixels)),
      labels_(std::move(labels)),
      num_classes_(num_classes) {
  if (num_classes_ < 2) throw ArgumentError("dataset needs at least 2 classes");
  if (sample_shape_.empty() || shape_size(sample_shape_) == 0) {
    throw DimensionError("dataset sample shape must be non-empty");
  }
  if (pixels_.size() != labels_.size() * shape_size(sample_shape_)) {
    throw DimensionError("dataset holds " + std::to_string(pixels_.size()) + " pixels for " +
                         std::to_string(labels_.size()) + " images of " +
                         shape_string(sample_shape_));
  }
  for (std::size_t label : labels_) {
    if (label >= num_classes_) {
      throw ArgumentError("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(num_classes_) + ")");
    }
  }
  for (float p : pixels_) {
    if (!(p >= 0.0f && p <= 1.0f)) throw ArgumentError("pixel outside [0, 1]");
  }
}

std::span<const float> Dataset::pixels(std::size_t index) const {
  if (index >= size()) throw ArgumentError("image index out of range");
  return std::span<const float>(pixels_).subspan(index * sample_dim(), sample_dim());
}

Tensor Dataset::image(std::size_t index) const {
  const auto px = pixels(index);
  return Tensor(sample_shape_, std::vector<float>(px.begin(), px.end()));
}

Tensor Dataset::batch(std::size_t begin, std::size_t count) const {
  if (count == 0 || begin + count > size()) throw ArgumentError("batch range out of bounds");
  Shape s{count};
  s.insert(s.end(), sample_shape_.begin(), sample_shape_.end());
  const auto first = pixels_.begin() + static_cast<std::ptrdiff_t>(begin * sample_dim());
  return Tensor(std::move(s),
                std::vector<float>(first, first + static_cast<std::ptrdiff_t>(count * sample_dim())));
}

Tensor Dataset::gather(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ArgumentError("gather of no images");
  Shape s{indices.size()};
  s.insert(s.end(), sample_shape_.begin(), sample_shape_.end());
  std::vector<float> out;
  out.reserve(indices.size() * sample_dim());
  for (std::size_t i : indices) {
    const auto px = pixels(i);
    out.insert(out.end(), px.begin(), px.end());
  }
  return Tensor(std::move(s), std::move(out));
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<float> px;
  std::vector<std::size_t> labels;
  px.reserve(indices.size() * sample_dim());
  for (std::size_t i : indices) {
    const auto p = pixels(i);
    px.insert(px.end(), p.begin(), p.end());
    labels.push_back(labels_[i]);
  }
  return Dataset(name_, split_, sample_shape_, std::move(px), std::move(labels), num_classes_);
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (begin > size()) throw ArgumentError("slice start out of range");
  count = std::min(count, size() - begin);
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = begin + i;
  return subset(idx);
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes_, 0);
  for (std::size_t l : labels_) ++counts[l];
  return counts;
}

std::string Dataset::fingerprint() const {
  detail::Fnv1a h;
  h.update(shape_string(sample_shape_));
  h.update(pixels_.data(), pixels_.size() * sizeof(float));
  h.update(labels_.data(), labels_.size() * sizeof(std::size_t));
  return h.hex();
}

Dataset load_idx(const fs::path& images, const fs::path& labels, Split split,
                 std::size_t num_classes) {
  const auto ib = read_bytes(images);
  const auto lb = read_bytes(labels);
  if (ib.size() < 16) {
    throw FormatError(FormatErrorKind::kLengthMismatch, images.string() + ": truncated IDX header");
  }
  if (be32(ib, 0) != kIdxImagesMagic) {
    throw FormatError(FormatErrorKind::kBadMagic, images.string() + ": not an IDX image file");
  }
  if (lb.size() < 8) {
    throw FormatError(FormatErrorKind::kLengthMismatch, labels.string() + ": truncated IDX header");
  }
  if (be32(lb, 0) != kIdxLabelsMagic) {
    throw FormatError(FormatErrorKind::kBadMagic, labels.string() + ": not an IDX label file");
  }
  const std::size_t n = be32(ib, 4);
  const std::size_t rows = be32(ib, 8);
  const std::size_t cols = be32(ib, 12);
  const std::size_t n_labels = be32(lb, 4);
  if (n != n_labels) {
    throw FormatError(FormatErrorKind::kConsistency,
                      images.string() + " holds " + std::to_string(n) + " images but " +
                          labels.string() + " holds " + std::to_string(n_labels) + " labels");
  }
  if (rows == 0 || cols == 0) {
    throw FormatError(FormatErrorKind::kMalformed, images.string() + ": zero image extent");
  }
  if (ib.size() != 16 + n * rows * cols) {
    throw FormatError(FormatErrorKind::kLengthMismatch,
                      images.string() + ": payload of " + std::to_string(ib.size() - 16) +
                          " bytes, header implies " + std::to_string(n * rows * cols));
  }
  if (lb.size() != 8 + n) {
    throw FormatError(FormatErrorKind::kLengthMismatch,
                      labels.string() + ": payload of " + std::to_string(lb.size() - 8) +
                          " bytes, header implies " + std::to_string(n));
  }
  std::vector<float> px(n * rows * cols);
  std::transform(ib.begin() + 16, ib.end(), px.begin(), unit_pixel);
  std::vector<std::size_t> ls(n);
  for (std::size_t i = 0; i < n; ++i) {
    ls[i] = lb[8 + i];
    if (ls[i] >= num_classes) {
      throw FormatError(FormatErrorKind::kConsistency,
                        labels.string() + ": label " + std::to_string(ls[i]) + " at index " +
                            std::to_string(i) + " outside [0, " + std::to_string(num_classes) +
                            ")");
    }
  }
  return Dataset(images.filename().string(), split, {1, rows, cols}, std::move(px),
                 std::move(ls), num_classes);
}

void write_idx(const Dataset& data, const fs::path& images, const fs::path& labels) {
  const Shape& s = data.sample_shape();
  if (s.size() != 3 || s[0] != 1) {
    throw DimensionError("IDX export needs [1, H, W] samples, got " + shape_string(s));
  }
  std::string ib;
  put_be32(ib, kIdxImagesMagic);
  put_be32(ib, static_cast<std::uint32_t>(data.size()));
  put_be32(ib, static_cast<std::uint32_t>(s[1]));
  put_be32(ib, static_cast<std::uint32_t>(s[2]));
  for (float p : data.pixels()) {
    ib.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(p * 255.0))));
  }
  std::string lb;
  put_be32(lb, kIdxLabelsMagic);
  put_be32(lb, static_cast<std::uint32_t>(data.size()));
  for (std::size_t l : data.labels()) lb.push_back(static_cast<char>(l));
  write_bytes(images, ib);
  write_bytes(labels, lb);
}

namespace {

void append_cifar_file(const fs::path& file, std::vector<float>& px,
                       std::vector<std::size_t>& labels) {
  const auto b = read_bytes(file);
  if (b.size() % kCifarRecord != 0) {
    throw FormatError(FormatErrorKind::kLengthMismatch,
                      file.string() + ": size " + std::to_string(b.size()) +
                          " is not a multiple of " + std::to_string(kCifarRecord));
  }
  const std::size_t n = b.size() / kCifarRecord;
  px.reserve(px.size() + n * kCifarPixels);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t at = r * kCifarRecord;
    if (b[at] >= 10) {
      throw FormatError(FormatErrorKind::kConsistency,
                        file.string() + ": record " + std::to_string(r) + " has label " +
                            std::to_string(b[at]));
    }
    labels.push_back(b[at]);
    for (std::size_t i = 1; i <= kCifarPixels; ++i) px.push_back(unit_pixel(b[at + i]));
  }
}

}  // namespace

Dataset load_cifar10_binary(const fs::path& path, Split split) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    if (split == Split::kTest) {
      files.push_back(path / "test_batch.bin");
    } else {
      for (int i = 1; i <= 5; ++i) {
        const fs::path f = path / ("data_batch_" + std::to_string(i) + ".bin");
        if (fs::exists(f)) files.push_back(f);
      }
      if (files.empty()) throw IoError(path.string() + ": no data_batch_*.bin files");
    }
  } else {
    files.push_back(path);
  }
  std::vector<float> px;
  std::vector<std::size_t> labels;
  for (const fs::path& f : files) append_cifar_file(f, px, labels);
  return Dataset("cifar10", split, {3, 32, 32}, std::move(px), std::move(labels), 10);
}

Dataset synthetic_blobs(std::size_t k, std::size_t d, std::size_t n, double separation,
                        std::uint64_t seed, double sigma) {
  if (!(separation > 0.0)) throw ArgumentError("separation must be positive");
  if (k < 2 || d == 0) throw ArgumentError("synthetic_blobs needs k >= 2 and d >= 1");
  if (sigma <= 0.0) sigma = separation / 8.0;
  constexpr double kLo = 0.2;
  constexpr double kHi = 0.8;
  if (separation > (kHi - kLo) * std::sqrt(static_cast<double>(d))) {
    throw ArgumentError("infeasible packing: separation exceeds the mean box diameter");
  }
  Rng rng = Rng::stream(seed, 1);
  std::vector<std::vector<double>> means;
  constexpr int kAttempts = 20000;
  for (std::size_t c = 0; c < k; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      std::vector<double> m(d);
      for (double& v : m) v = rng.uniform(kLo, kHi);
      placed = std::all_of(means.begin(), means.end(), [&](const std::vector<double>& o) {
        double dist2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) dist2 += (m[j] - o[j]) * (m[j] - o[j]);
        return std::sqrt(dist2) >= separation;
      });
      if (placed) means.push_back(std::move(m));
    }
    if (!placed) {
      throw ArgumentError("infeasible packing: cannot place " + std::to_string(k) +
                          " clusters at separation " + std::to_string(separation));
    }
  }
  std::vector<float> px(n * d);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<std::size_t>(rng.below(k));
    for (std::size_t j = 0; j < d; ++j) {
      const double v = means[labels[i]][j] + sigma * rng.normal();
      px[i * d + j] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return Dataset("synthetic", Split::kTrain, {1, 1, d}, std::move(px), std::move(labels), k);
}

Dataset load_dataset(const fs::path& dir, Split split) {
  const std::string prefix = split == Split::kTrain ? "train" : "t10k";
  const fs::path images = dir / (prefix + "-images-idx3-ubyte");
  const fs::path labels = dir / (prefix + "-labels-idx1-ubyte");
  if (fs::exists(images) && fs::exists(labels)) {
    // IDX carries no class count: take the largest label over both splits.
    std::size_t k = 2;
    for (const char* p : {"train-labels-idx1-ubyte", "t10k-labels-idx1-ubyte"}) {
      const fs::path path = dir / p;
      if (!fs::exists(path)) continue;
      const std::vector<unsigned char> bytes = read_bytes(path);
      for (std::size_t i = 8; i < bytes.size(); ++i) {
        k = std::max<std::size_t>(k, std::size_t{bytes[i]} + 1);
      }
    }
    return load_idx(images, labels, split, k);
  }
  if (fs::exists(dir / "test_batch.bin") || fs::exists(dir / "data_batch_1.bin")) {
    return load_cifar10_binary(dir, split);
  }
  throw IoError(dir.string() + ": no MNIST IDX files or CIFAR-10 batches found");
}

}  // namespace uap

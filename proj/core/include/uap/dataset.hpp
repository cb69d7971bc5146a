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

#ifndef UAP_DATASET_HPP_
#define UAP_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uap/tensor.hpp"

namespace uap {

enum class Split { kTrain, kTest };

const char* to_string(Split split);

/// Labelled images with pixels in [0, 1]. Immutable after construction.
class Dataset {
 public:
  Dataset(std::string name, Split split, Shape sample_shape, std::vector<float> pixels,
          std::vector<std::size_t> labels, std::size_t num_classes);

  const std::string& name() const noexcept { return name_; }
  Split split() const noexcept { return split_; }
  /// Per-image shape, [C, H, W].
  const Shape& sample_shape() const noexcept { return sample_shape_; }
  std::size_t sample_dim() const noexcept { return shape_size(sample_shape_); }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t num_classes() const noexcept { return num_classes_; }

  std::span<const float> pixels() const noexcept { return pixels_; }
  std::span<const float> pixels(std::size_t index) const;
  std::span<const std::size_t> labels() const noexcept { return labels_; }
  std::size_t label(std::size_t index) const { return labels_.at(index); }

  /// Single image, shape [C, H, W].
  Tensor image(std::size_t index) const;
  /// Images [begin, begin+count) as [count, C, H, W].
  Tensor batch(std::size_t begin, std::size_t count) const;
  /// Images at the given indices as [indices.size(), C, H, W].
  Tensor gather(std::span<const std::size_t> indices) const;

  Dataset subset(std::span<const std::size_t> indices) const;
  Dataset slice(std::size_t begin, std::size_t count) const;
  std::vector<std::size_t> class_counts() const;

  /// Content hash over shape, pixels and labels.
  std::string fingerprint() const;

 private:
  std::string name_;
  Split split_;
  Shape sample_shape_;
  std::vector<float> pixels_;
  std::vector<std::size_t> labels_;
  std::size_t num_classes_;
};

/// MNIST-style IDX pair: images magic 0x00000803 (n, rows, cols), labels
/// magic 0x00000801 (n). Pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 Split split = Split::kTest, std::size_t num_classes = 10);

/// Writes the IDX pair (pixels rounded to bytes). The sample shape must be
/// [1, H, W].
void write_idx(const Dataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels);

/// CIFAR-10 binary batches: records of 1 label byte + 3072 pixel bytes
/// (R, G, B planes of 32x32). `path` is a single batch file, or a directory
/// from which data_batch_*.bin (train) or test_batch.bin (test) are read.
Dataset load_cifar10_binary(const std::filesystem::path& path, Split split = Split::kTest);

/// k Gaussian clusters in [0,1]^d, sample shape [1, 1, d]. Means are drawn
/// in [0.2, 0.8]^d at pairwise distance >= separation; labels are uniform.
/// sigma <= 0 selects separation / 8.
Dataset synthetic_blobs(std::size_t k, std::size_t d, std::size_t n, double separation,
                        std::uint64_t seed, double sigma = 0.0);

/// Loads a split from a directory holding either the MNIST IDX files
/// ({train,t10k}-{images-idx3,labels-idx1}-ubyte) or CIFAR-10 batches.
Dataset load_dataset(const std::filesystem::path& dir, Split split);

}  // namespace uap

#endif  // UAP_DATASET_HPP_

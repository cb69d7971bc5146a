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

#ifndef UAP_TENSOR_HPP_
#define UAP_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace uap {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major float32 array. The shape is fixed at construction; only
/// the element buffer may be written.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor. Every extent must be positive.
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<float> data);
  Tensor(std::initializer_list<std::size_t> shape, std::vector<float> data)
      : Tensor(Shape(shape), std::move(data)) {}

  static Tensor filled(Shape shape, float value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> mutable_data() noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  float operator[](std::size_t i) const { return data_[i]; }
  float& operator[](std::size_t i) { return data_[i]; }

  /// Same buffer under a new shape of equal element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  /// Slice along the leading axis: rows [begin, begin + count).
  Tensor rows(std::size_t begin, std::size_t count) const;
  /// Single leading-axis entry with that axis dropped.
  Tensor row(std::size_t index) const;

  /// Bitwise equality of shape and data.
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// Throws DimensionError unless the shapes are identical.
void require_same_shape(const Tensor& a, const Tensor& b, const char* context);

/// Stacks equally shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> items);

float max_abs(const Tensor& t);
bool all_finite(const Tensor& t);

}  // namespace uap

#endif  // UAP_TENSOR_HPP_

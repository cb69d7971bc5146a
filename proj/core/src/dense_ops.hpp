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

// Raw-buffer kernel implementations shared by the public Tensor API and the
// model executor. Weights are held as double-precision Eigen matrices so the
// executor converts them once per model instead of once per call.

#ifndef UAP_SRC_DENSE_OPS_HPP_
#define UAP_SRC_DENSE_OPS_HPP_

#include <Eigen/Dense>
#include <cstddef>

#include "uap/kernels.hpp"
#include "uap/tensor.hpp"

namespace uap::detail {

struct DenseAffine {
  DenseAffine(const Tensor& weight, const Tensor& bias);

  std::size_t in = 0;
  std::size_t out = 0;
  Eigen::MatrixXd wt;  // [in, out], i.e. W transposed
  Eigen::VectorXd b;
};

void affine_forward(const DenseAffine& op, const float* x, std::size_t n, float* y);
/// Any of gx, gw, gb may be null. gw/gb are overwritten, not accumulated.
void affine_backward(const DenseAffine& op, const float* x, const float* gy,
                     std::size_t n, float* gx, float* gw, float* gb);

struct DenseConv {
  DenseConv(const Tensor& kernels, const Tensor& bias, Conv2dGeometry geometry);

  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t kh = 0;
  std::size_t kw = 0;
  Conv2dGeometry geometry;
  Eigen::MatrixXd k;  // [c_out, c_in*kh*kw]
  Eigen::VectorXd b;
};

struct Plane {
  std::size_t h = 0;
  std::size_t w = 0;
};

Plane conv_output_plane(const DenseConv& op, Plane in);

void conv_forward(const DenseConv& op, const float* x, std::size_t n, Plane in,
                  float* y);
void conv_backward(const DenseConv& op, const float* x, const float* gy,
                   std::size_t n, Plane in, float* gx, float* gk, float* gb);

Plane pool_output_plane(Plane in, std::size_t window, std::size_t stride);

/// x holds n*channels planes of extent `in`.
void pool_forward(PoolMode mode, std::size_t window, std::size_t stride,
                  const float* x, std::size_t planes, Plane in, float* y);
void pool_backward(PoolMode mode, std::size_t window, std::size_t stride,
                   const float* x, const float* gy, std::size_t planes, Plane in,
                   float* gx);

void relu_forward(const float* x, std::size_t count, float* y);
void relu_backward(const float* x, const float* gy, std::size_t count, float* gx);

}  // namespace uap::detail

#endif  // UAP_SRC_DENSE_OPS_HPP_

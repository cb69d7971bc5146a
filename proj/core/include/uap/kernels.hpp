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

// Forward kernels and their hand-paired backward passes.
//
// Every kernel accepts either a single sample or a batch with a leading
// sample axis:
//   affine:      x [d_in]        or [n, d_in]
//   conv / pool: x [C, H, W]     or [n, C, H, W]
// Products are accumulated in double precision and rounded to float32 on
// store. Kernels are pure functions; concurrent calls are safe.

#ifndef UAP_KERNELS_HPP_
#define UAP_KERNELS_HPP_

#include <cstddef>

#include "uap/tensor.hpp"

namespace uap {

struct Conv2dGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

enum class PoolMode { kMax, kAvg };

struct AffineGradients {
  Tensor input;
  Tensor weight;  // empty when parameter gradients were not requested
  Tensor bias;
};

struct Conv2dGradients {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};

/// y = W x + b with W [d_out, d_in].
Tensor affine_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);
AffineGradients affine_backward(const Tensor& x, const Tensor& weight,
                                const Tensor& grad_out, bool param_grads = true);

/// Zero-padded cross-correlation (no kernel flip). kernels [C_out, C_in, kh, kw].
Tensor conv2d_forward(const Tensor& x, const Tensor& kernels, const Tensor& bias,
                      Conv2dGeometry geometry);
Conv2dGradients conv2d_backward(const Tensor& x, const Tensor& kernels,
                                const Tensor& grad_out, Conv2dGeometry geometry,
                                bool param_grads = true);

/// Unpadded per-channel window reduction; output extent floor((H-w)/s)+1.
Tensor pool2d_forward(const Tensor& x, PoolMode mode, std::size_t window,
                      std::size_t stride);
/// Max mode routes each window's gradient to its first maximal element.
Tensor pool2d_backward(const Tensor& x, PoolMode mode, std::size_t window,
                       std::size_t stride, const Tensor& grad_out);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

/// Output spatial extent of a window sweep; throws DimensionError when it
/// would be non-positive.
std::size_t sweep_extent(std::size_t in, std::size_t window, std::size_t stride,
                         std::size_t padding);

}  // namespace uap

#endif  // UAP_KERNELS_HPP_

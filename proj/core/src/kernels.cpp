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

#include "uap/kernels.hpp"

#include "dense_ops.hpp"
#include "uap/error.hpp"

namespace uap {

std::size_t sweep_extent(std::size_t in, std::size_t window, std::size_t stride,
                         std::size_t padding) {
  if (stride == 0) throw DimensionError("stride must be >= 1");
  if (window == 0) throw DimensionError("window must be >= 1");
  const std::size_t padded = in + 2 * padding;
  if (window > padded) {
    throw DimensionError("window " + std::to_string(window) +
                         " exceeds padded extent " + std::to_string(padded));
  }
  return (padded - window) / stride + 1;
}

namespace {

struct Batch {
  std::size_t n = 1;
  bool batched = false;
};

Batch affine_batch(const Tensor& x, std::size_t d_in, const Tensor& weight) {
  if (x.rank() == 1 && x.dim(0) == d_in) return {1, false};
  if (x.rank() == 2 && x.dim(1) == d_in) return {x.dim(0), true};
  throw DimensionError("affine input " + shape_string(x.shape()) +
                       " does not match weight " + shape_string(weight.shape()));
}

Batch spatial_batch(const Tensor& x, const char* what) {
  if (x.rank() == 3) return {1, false};
  if (x.rank() == 4) return {x.dim(0), true};
  throw DimensionError(std::string(what) + " input must be [C,H,W] or [n,C,H,W], got " +
                       shape_string(x.shape()));
}

Shape spatial_shape(Batch b, std::size_t c, detail::Plane p) {
  if (b.batched) return {b.n, c, p.h, p.w};
  return {c, p.h, p.w};
}

detail::Plane plane_of(const Tensor& x) {
  return {x.dim(x.rank() - 2), x.dim(x.rank() - 1)};
}

std::size_t channels_of(const Tensor& x) { return x.dim(x.rank() - 3); }

}  // namespace

Tensor affine_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const detail::DenseAffine op(weight, bias);
  const Batch b = affine_batch(x, op.in, weight);
  Tensor y(b.batched ? Shape{b.n, op.out} : Shape{op.out});
  detail::affine_forward(op, x.data().data(), b.n, y.mutable_data().data());
  return y;
}

AffineGradients affine_backward(const Tensor& x, const Tensor& weight,
                                const Tensor& grad_out, bool param_grads) {
  const detail::DenseAffine op(weight, Tensor({weight.dim(0)}));
  const Batch b = affine_batch(x, op.in, weight);
  const Shape out_shape = b.batched ? Shape{b.n, op.out} : Shape{op.out};
  if (grad_out.shape() != out_shape) {
    throw DimensionError("affine upstream gradient " +
                         shape_string(grad_out.shape()) + " vs output " +
                         shape_string(out_shape));
  }
  AffineGradients g;
  g.input = Tensor(x.shape());
  if (param_grads) {
    g.weight = Tensor(weight.shape());
    g.bias = Tensor({op.out});
  }
  detail::affine_backward(op, x.data().data(), grad_out.data().data(), b.n,
                          g.input.mutable_data().data(),
                          param_grads ? g.weight.mutable_data().data() : nullptr,
                          param_grads ? g.bias.mutable_data().data() : nullptr);
  return g;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& kernels, const Tensor& bias,
                      Conv2dGeometry geometry) {
  const detail::DenseConv op(kernels, bias, geometry);
  const Batch b = spatial_batch(x, "conv2d");
  if (channels_of(x) != op.c_in) {
    throw DimensionError("conv2d input " + shape_string(x.shape()) +
                         " does not match kernels " + shape_string(kernels.shape()));
  }
  const detail::Plane in = plane_of(x);
  const detail::Plane out = detail::conv_output_plane(op, in);
  Tensor y(spatial_shape(b, op.c_out, out));
  detail::conv_forward(op, x.data().data(), b.n, in, y.mutable_data().data());
  return y;
}

Conv2dGradients conv2d_backward(const Tensor& x, const Tensor& kernels,
                                const Tensor& grad_out, Conv2dGeometry geometry,
                                bool param_grads) {
  const detail::DenseConv op(kernels, Tensor({kernels.dim(0)}), geometry);
  const Batch b = spatial_batch(x, "conv2d");
  if (channels_of(x) != op.c_in) {
    throw DimensionError("conv2d input " + shape_string(x.shape()) +
                         " does not match kernels " + shape_string(kernels.shape()));
  }
  const detail::Plane in = plane_of(x);
  const Shape out_shape =
      spatial_shape(b, op.c_out, detail::conv_output_plane(op, in));
  if (grad_out.shape() != out_shape) {
    throw DimensionError("conv2d upstream gradient " +
                         shape_string(grad_out.shape()) + " vs output " +
                         shape_string(out_shape));
  }
  Conv2dGradients g;
  g.input = Tensor(x.shape());
  if (param_grads) {
    g.kernels = Tensor(kernels.shape());
    g.bias = Tensor({op.c_out});
  }
  detail::conv_backward(op, x.data().data(), grad_out.data().data(), b.n, in,
                        g.input.mutable_data().data(),
                        param_grads ? g.kernels.mutable_data().data() : nullptr,
                        param_grads ? g.bias.mutable_data().data() : nullptr);
  return g;
}

Tensor pool2d_forward(const Tensor& x, PoolMode mode, std::size_t window,
                      std::size_t stride) {
  const Batch b = spatial_batch(x, "pool2d");
  const std::size_t c = channels_of(x);
  const detail::Plane in = plane_of(x);
  const detail::Plane out = detail::pool_output_plane(in, window, stride);
  Tensor y(spatial_shape(b, c, out));
  detail::pool_forward(mode, window, stride, x.data().data(), b.n * c, in,
                       y.mutable_data().data());
  return y;
}

Tensor pool2d_backward(const Tensor& x, PoolMode mode, std::size_t window,
                       std::size_t stride, const Tensor& grad_out) {
  const Batch b = spatial_batch(x, "pool2d");
  const std::size_t c = channels_of(x);
  const detail::Plane in = plane_of(x);
  const Shape out_shape =
      spatial_shape(b, c, detail::pool_output_plane(in, window, stride));
  if (grad_out.shape() != out_shape) {
    throw DimensionError("pool2d upstream gradient " +
                         shape_string(grad_out.shape()) + " vs output " +
                         shape_string(out_shape));
  }
  Tensor gx(x.shape());
  detail::pool_backward(mode, window, stride, x.data().data(),
                        grad_out.data().data(), b.n * c, in,
                        gx.mutable_data().data());
  return gx;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y(x.shape());
  detail::relu_forward(x.data().data(), x.size(), y.mutable_data().data());
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  require_same_shape(x, grad_out, "relu upstream gradient");
  Tensor gx(x.shape());
  detail::relu_backward(x.data().data(), grad_out.data().data(), x.size(),
                        gx.mutable_data().data());
  return gx;
}

}  // namespace uap

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

#include "dense_ops.hpp"

#include <algorithm>
#include <vector>

#include "uap/error.hpp"

namespace uap::detail {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::MatrixXf;

// Upper bound on doubles held by one im2col buffer (~32 MB).
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

Index idx(std::size_t v) { return static_cast<Index>(v); }

}  // namespace

DenseAffine::DenseAffine(const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2) {
    throw DimensionError("affine weight must be [d_out, d_in], got " +
                         shape_string(weight.shape()));
  }
  out = weight.dim(0);
  in = weight.dim(1);
  if (bias.rank() != 1 || bias.dim(0) != out) {
    throw DimensionError("affine bias " + shape_string(bias.shape()) +
                         " does not match weight " + shape_string(weight.shape()));
  }
  // Row-major [out, in] is column-major [in, out].
  wt = Eigen::Map<const MatrixXf>(weight.data().data(), idx(in), idx(out))
           .cast<double>();
  b = Eigen::Map<const Eigen::VectorXf>(bias.data().data(), idx(out)).cast<double>();
}

void affine_forward(const DenseAffine& op, const float* x, std::size_t n, float* y) {
  const MatrixXd xs =
      Eigen::Map<const MatrixXf>(x, idx(op.in), idx(n)).cast<double>();
  MatrixXd ys(idx(op.out), idx(n));
  ys.noalias() = op.wt.transpose() * xs;
  ys.colwise() += op.b;
  Eigen::Map<MatrixXf>(y, idx(op.out), idx(n)) = ys.cast<float>();
}

void affine_backward(const DenseAffine& op, const float* x, const float* gy,
                     std::size_t n, float* gx, float* gw, float* gb) {
  const MatrixXd g =
      Eigen::Map<const MatrixXf>(gy, idx(op.out), idx(n)).cast<double>();
  if (gx != nullptr) {
    MatrixXd gxs(idx(op.in), idx(n));
    gxs.noalias() = op.wt * g;
    Eigen::Map<MatrixXf>(gx, idx(op.in), idx(n)) = gxs.cast<float>();
  }
  if (gw != nullptr) {
    const MatrixXd xs =
        Eigen::Map<const MatrixXf>(x, idx(op.in), idx(n)).cast<double>();
    MatrixXd gws(idx(op.in), idx(op.out));
    gws.noalias() = xs * g.transpose();
    Eigen::Map<MatrixXf>(gw, idx(op.in), idx(op.out)) = gws.cast<float>();
  }
  if (gb != nullptr) {
    Eigen::Map<Eigen::VectorXf>(gb, idx(op.out)) = g.rowwise().sum().cast<float>();
  }
}

DenseConv::DenseConv(const Tensor& kernels, const Tensor& bias,
                     Conv2dGeometry geom)
    : geometry(geom) {
  if (kernels.rank() != 4) {
    throw DimensionError("conv kernels must be [C_out, C_in, kh, kw], got " +
                         shape_string(kernels.shape()));
  }
  if (geometry.stride == 0) throw DimensionError("conv stride must be >= 1");
  c_out = kernels.dim(0);
  c_in = kernels.dim(1);
  kh = kernels.dim(2);
  kw = kernels.dim(3);
  if (bias.rank() != 1 || bias.dim(0) != c_out) {
    throw DimensionError("conv bias " + shape_string(bias.shape()) +
                         " does not match kernels " +
                         shape_string(kernels.shape()));
  }
  using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  k = Eigen::Map<const RowMajorF>(kernels.data().data(), idx(c_out),
                                  idx(c_in * kh * kw))
          .cast<double>();
  b = Eigen::Map<const Eigen::VectorXf>(bias.data().data(), idx(c_out)).cast<double>();
}

Plane conv_output_plane(const DenseConv& op, Plane in) {
  return {sweep_extent(in.h, op.kh, op.geometry.stride, op.geometry.padding),
          sweep_extent(in.w, op.kw, op.geometry.stride, op.geometry.padding)};
}

namespace {

struct ConvLayout {
  Plane in;
  Plane out;
  std::size_t patch = 0;   // c_in * kh * kw
  std::size_t pixels = 0;  // out.h * out.w
  std::size_t chunk = 0;   // images per im2col buffer
};

ConvLayout layout_for(const DenseConv& op, Plane in) {
  ConvLayout l;
  l.in = in;
  l.out = conv_output_plane(op, in);
  l.patch = op.c_in * op.kh * op.kw;
  l.pixels = l.out.h * l.out.w;
  l.chunk = std::max<std::size_t>(1, kColumnBudget / (l.patch * l.pixels));
  return l;
}

void im2col(const DenseConv& op, const ConvLayout& l, const float* x,
            std::size_t images, MatrixXd& cols) {
  const std::size_t s = op.geometry.stride;
  const auto pad = static_cast<std::ptrdiff_t>(op.geometry.padding);
  const std::size_t in_plane = l.in.h * l.in.w;
  cols.resize(idx(l.patch), idx(images * l.pixels));
  for (std::size_t m = 0; m < images; ++m) {
    const float* img = x + m * op.c_in * in_plane;
    for (std::size_t c = 0; c < op.c_in; ++c) {
      for (std::size_t i = 0; i < op.kh; ++i) {
        for (std::size_t j = 0; j < op.kw; ++j) {
          const Index r = idx((c * op.kh + i) * op.kw + j);
          for (std::size_t oh = 0; oh < l.out.h; ++oh) {
            const std::ptrdiff_t ih =
                static_cast<std::ptrdiff_t>(oh * s + i) - pad;
            for (std::size_t ow = 0; ow < l.out.w; ++ow) {
              const std::ptrdiff_t iw =
                  static_cast<std::ptrdiff_t>(ow * s + j) - pad;
              double v = 0.0;
              if (ih >= 0 && iw >= 0 && ih < static_cast<std::ptrdiff_t>(l.in.h) &&
                  iw < static_cast<std::ptrdiff_t>(l.in.w)) {
                v = img[c * in_plane + static_cast<std::size_t>(ih) * l.in.w +
                        static_cast<std::size_t>(iw)];
              }
              cols(r, idx(m * l.pixels + oh * l.out.w + ow)) = v;
            }
          }
        }
      }
    }
  }
}

void col2im(const DenseConv& op, const ConvLayout& l, const MatrixXd& cols,
            std::size_t images, double* gx) {
  const std::size_t s = op.geometry.stride;
  const auto pad = static_cast<std::ptrdiff_t>(op.geometry.padding);
  const std::size_t in_plane = l.in.h * l.in.w;
  for (std::size_t m = 0; m < images; ++m) {
    double* img = gx + m * op.c_in * in_plane;
    for (std::size_t c = 0; c < op.c_in; ++c) {
      for (std::size_t i = 0; i < op.kh; ++i) {
        for (std::size_t j = 0; j < op.kw; ++j) {
          const Index r = idx((c * op.kh + i) * op.kw + j);
          for (std::size_t oh = 0; oh < l.out.h; ++oh) {
            const std::ptrdiff_t ih =
                static_cast<std::ptrdiff_t>(oh * s + i) - pad;
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(l.in.h)) continue;
            for (std::size_t ow = 0; ow < l.out.w; ++ow) {
              const std::ptrdiff_t iw =
                  static_cast<std::ptrdiff_t>(ow * s + j) - pad;
              if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(l.in.w)) continue;
              img[c * in_plane + static_cast<std::size_t>(ih) * l.in.w +
                  static_cast<std::size_t>(iw)] +=
                  cols(r, idx(m * l.pixels + oh * l.out.w + ow));
            }
          }
        }
      }
    }
  }
}

}  // namespace

void conv_forward(const DenseConv& op, const float* x, std::size_t n, Plane in,
                  float* y) {
  const ConvLayout l = layout_for(op, in);
  MatrixXd cols;
  MatrixXd prod;
  for (std::size_t first = 0; first < n; first += l.chunk) {
    const std::size_t images = std::min(l.chunk, n - first);
    im2col(op, l, x + first * op.c_in * l.in.h * l.in.w, images, cols);
    prod.resize(idx(op.c_out), cols.cols());
    prod.noalias() = op.k * cols;
    for (std::size_t m = 0; m < images; ++m) {
      float* out = y + (first + m) * op.c_out * l.pixels;
      for (std::size_t co = 0; co < op.c_out; ++co) {
        const double bias = op.b(idx(co));
        for (std::size_t p = 0; p < l.pixels; ++p) {
          out[co * l.pixels + p] =
              static_cast<float>(prod(idx(co), idx(m * l.pixels + p)) + bias);
        }
      }
    }
  }
}

void conv_backward(const DenseConv& op, const float* x, const float* gy,
                   std::size_t n, Plane in, float* gx, float* gk, float* gb) {
  const ConvLayout l = layout_for(op, in);
  const std::size_t in_size = op.c_in * l.in.h * l.in.w;
  const bool params = gk != nullptr || gb != nullptr;
  MatrixXd dk = MatrixXd::Zero(idx(op.c_out), idx(l.patch));
  Eigen::VectorXd db = Eigen::VectorXd::Zero(idx(op.c_out));
  std::vector<double> dx;
  if (gx != nullptr) dx.assign(n * in_size, 0.0);

  MatrixXd cols;
  MatrixXd g;
  MatrixXd dcols;
  for (std::size_t first = 0; first < n; first += l.chunk) {
    const std::size_t images = std::min(l.chunk, n - first);
    g.resize(idx(op.c_out), idx(images * l.pixels));
    for (std::size_t m = 0; m < images; ++m) {
      const float* src = gy + (first + m) * op.c_out * l.pixels;
      for (std::size_t co = 0; co < op.c_out; ++co) {
        for (std::size_t p = 0; p < l.pixels; ++p) {
          g(idx(co), idx(m * l.pixels + p)) = src[co * l.pixels + p];
        }
      }
    }
    if (params) {
      im2col(op, l, x + first * in_size, images, cols);
      dk.noalias() += g * cols.transpose();
      db += g.rowwise().sum();
    }
    if (gx != nullptr) {
      dcols.resize(idx(l.patch), g.cols());
      dcols.noalias() = op.k.transpose() * g;
      col2im(op, l, dcols, images, dx.data() + first * in_size);
    }
  }
  if (gx != nullptr) {
    std::transform(dx.begin(), dx.end(), gx,
                   [](double v) { return static_cast<float>(v); });
  }
  if (gk != nullptr) {
    for (std::size_t co = 0; co < op.c_out; ++co) {
      for (std::size_t r = 0; r < l.patch; ++r) {
        gk[co * l.patch + r] = static_cast<float>(dk(idx(co), idx(r)));
      }
    }
  }
  if (gb != nullptr) {
    for (std::size_t co = 0; co < op.c_out; ++co) {
      gb[co] = static_cast<float>(db(idx(co)));
    }
  }
}

Plane pool_output_plane(Plane in, std::size_t window, std::size_t stride) {
  return {sweep_extent(in.h, window, stride, 0),
          sweep_extent(in.w, window, stride, 0)};
}

void pool_forward(PoolMode mode, std::size_t window, std::size_t stride,
                  const float* x, std::size_t planes, Plane in, float* y) {
  const Plane out = pool_output_plane(in, window, stride);
  const double inv_area = 1.0 / static_cast<double>(window * window);
  for (std::size_t p = 0; p < planes; ++p) {
    const float* src = x + p * in.h * in.w;
    float* dst = y + p * out.h * out.w;
    for (std::size_t oh = 0; oh < out.h; ++oh) {
      for (std::size_t ow = 0; ow < out.w; ++ow) {
        const float* corner = src + oh * stride * in.w + ow * stride;
        if (mode == PoolMode::kMax) {
          float best = corner[0];
          for (std::size_t i = 0; i < window; ++i) {
            for (std::size_t j = 0; j < window; ++j) {
              best = std::max(best, corner[i * in.w + j]);
            }
          }
          dst[oh * out.w + ow] = best;
        } else {
          double sum = 0.0;
          for (std::size_t i = 0; i < window; ++i) {
            for (std::size_t j = 0; j < window; ++j) sum += corner[i * in.w + j];
          }
          dst[oh * out.w + ow] = static_cast<float>(sum * inv_area);
        }
      }
    }
  }
}

void pool_backward(PoolMode mode, std::size_t window, std::size_t stride,
                   const float* x, const float* gy, std::size_t planes, Plane in,
                   float* gx) {
  const Plane out = pool_output_plane(in, window, stride);
  const double inv_area = 1.0 / static_cast<double>(window * window);
  std::vector<double> acc(in.h * in.w);
  for (std::size_t p = 0; p < planes; ++p) {
    const float* src = x + p * in.h * in.w;
    const float* g = gy + p * out.h * out.w;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t oh = 0; oh < out.h; ++oh) {
      for (std::size_t ow = 0; ow < out.w; ++ow) {
        const std::size_t base = oh * stride * in.w + ow * stride;
        const double up = g[oh * out.w + ow];
        if (mode == PoolMode::kMax) {
          std::size_t arg = base;
          for (std::size_t i = 0; i < window; ++i) {
            for (std::size_t j = 0; j < window; ++j) {
              const std::size_t at = base + i * in.w + j;
              if (src[at] > src[arg]) arg = at;
            }
          }
          acc[arg] += up;
        } else {
          for (std::size_t i = 0; i < window; ++i) {
            for (std::size_t j = 0; j < window; ++j) {
              acc[base + i * in.w + j] += up * inv_area;
            }
          }
        }
      }
    }
    float* dst = gx + p * in.h * in.w;
    for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<float>(acc[i]);
  }
}

void relu_forward(const float* x, std::size_t count, float* y) {
  for (std::size_t i = 0; i < count; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* gy, std::size_t count, float* gx) {
  for (std::size_t i = 0; i < count; ++i) gx[i] = x[i] > 0.0f ? gy[i] : 0.0f;
}

}  // namespace uap::detail

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

#ifndef UAP_LINALG_HPP_
#define UAP_LINALG_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace uap {

/// Dense row-major double matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  Matrix transposed() const;
};

/// Thin SVD A = U diag(sigma) V^T with r = min(rows, cols) components,
/// singular values descending.
struct Svd {
  std::vector<double> sigma;  // [r]
  Matrix u;                   // [rows, r]
  Matrix v;                   // [cols, r]
};

/// One-sided (Hestenes) Jacobi on the thinner orientation. A column pair is
/// considered orthogonal once |a_p . a_q| <= tol * |a_p| |a_q|.
Svd jacobi_svd(const Matrix& a, double tol = 1e-8, int max_sweeps = 60);

struct LinearFit {
  /// 1 - mean(PRESS) / mean(SST), PRESS from leave-one-out residuals
  /// e_i / (1 - h_ii). Samples with unit leverage have no defined held-out
  /// residual and are left out of the PRESS mean.
  double predicted_r2 = 0.0;
  /// Ordinary in-sample R^2 of the same fit.
  double r2 = 0.0;
  std::size_t rank = 0;
  /// Samples whose held-out residual entered PRESS.
  std::size_t held_out = 0;
};

/// Least-squares fit of y on the columns of x plus an intercept, via
/// column-pivoted Householder QR. Requires x.rows == y.size() > x.cols + 1.
LinearFit fit_affine(const Matrix& x, std::span<const double> y);

}  // namespace uap

#endif  // UAP_LINALG_HPP_

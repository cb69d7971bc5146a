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

#include "uap/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uap/error.hpp"

namespace uap {

Matrix Matrix::transposed() const {
  Matrix t(cols, rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

namespace {

// Columns stored contiguously: col[j] is column j of the working matrix.
Svd jacobi_tall(const Matrix& a, double tol, int max_sweeps) {
  const std::size_t m = a.rows;
  const std::size_t n = a.cols;
  std::vector<std::vector<double>> col(n, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) col[j][i] = a(i, j);
  }
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        const double* cp = col[p].data();
        const double* cq = col[q].data();
        for (std::size_t i = 0; i < m; ++i) {
          alpha += cp[i] * cp[i];
          beta += cq[i] * cq[i];
          gamma += cp[i] * cq[i];
        }
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::fabs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        double* wp = col[p].data();
        double* wq = col[q].data();
        for (std::size_t i = 0; i < m; ++i) {
          const double x = wp[i];
          const double y = wq[i];
          wp[i] = c * x - s * y;
          wq[i] = s * x + c * y;
        }
        double* vp = v[p].data();
        double* vq = v[q].data();
        for (std::size_t i = 0; i < n; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
  }
  if (!converged) throw NumericError("Jacobi SVD did not converge");

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    norms[j] = std::sqrt(std::inner_product(col[j].begin(), col[j].end(), col[j].begin(), 0.0));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  Svd out{std::vector<double>(n), Matrix(m, n), Matrix(n, n)};
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t j = order[r];
    out.sigma[r] = norms[j];
    for (std::size_t i = 0; i < m; ++i) out.u(i, r) = norms[j] > 0.0 ? col[j][i] / norms[j] : 0.0;
    for (std::size_t i = 0; i < n; ++i) out.v(i, r) = v[j][i];
  }
  return out;
}

}  // namespace

Svd jacobi_svd(const Matrix& a, double tol, int max_sweeps) {
  if (a.rows == 0 || a.cols == 0) throw ArgumentError("SVD of an empty matrix");
  for (double x : a.data) {
    if (!std::isfinite(x)) throw NumericError("SVD input holds non-finite entries");
  }
  if (a.cols <= a.rows) return jacobi_tall(a, tol, max_sweeps);
  Svd t = jacobi_tall(a.transposed(), tol, max_sweeps);
  std::swap(t.u, t.v);
  return t;
}

namespace {

// 1 - h_ii below which a sample counts as having unit leverage.
constexpr double kUnitLeverage = 1e-8;

}  // namespace

LinearFit fit_affine(const Matrix& x, std::span<const double> y) {
  const std::size_t n = x.rows;
  const std::size_t p = x.cols + 1;
  if (y.size() != n) throw DimensionError("response length differs from design rows");
  if (n <= p) throw ArgumentError("need more samples than fitted coefficients");

  Eigen::MatrixXd design(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (std::size_t j = 0; j < x.cols; ++j) design(i, j + 1) = x(i, j);
  }
  const Eigen::Map<const Eigen::VectorXd> response(y.data(), static_cast<Eigen::Index>(n));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::Index rank = qr.rank();
  const Eigen::VectorXd coef = qr.solve(response);
  const Eigen::VectorXd resid = response - design * coef;

  // Thin Q spanning the column space; leverage h_ii is the squared row norm.
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), rank);
  q = qr.householderQ() * q;

  const double mean = response.mean();
  const double sst = (response.array() - mean).square().sum();
  double sse = 0.0;
  double press = 0.0;
  std::size_t defined = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double e = resid(row);
    sse += e * e;
    // h_ii = 1: the sample alone spans a design direction, so dropping it
    // leaves that coefficient unidentified and its held-out residual undefined.
    const double denom = 1.0 - q.row(row).squaredNorm();
    if (denom <= kUnitLeverage) continue;
    press += (e / denom) * (e / denom);
    ++defined;
  }
  LinearFit fit;
  fit.rank = static_cast<std::size_t>(rank);
  fit.held_out = defined;
  if (sst <= 0.0) throw DegenerateBoundaryError("response has zero variance");
  fit.r2 = 1.0 - sse / sst;
  fit.predicted_r2 = defined == 0 ? -std::numeric_limits<double>::max()
                                  : 1.0 - (press / static_cast<double>(defined)) /
                                              (sst / static_cast<double>(n));
  return fit;
}

}  // namespace uap

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

// Linear companion networks and extraction of their affine map x -> Ux + b.
//
// The companion keeps every weight and bias of the source network, drops the
// activations and dropout, and swaps max-pooling for average pooling with the
// same window. The result is exactly affine in its input, so one backward
// pass per class at any point recovers U, and the response at the origin
// recovers b.

#ifndef UAP_LINEARIZER_HPP_
#define UAP_LINEARIZER_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "uap/model.hpp"

namespace uap {

enum class ExtractionMethod { kBackwardPass, kBasisProbe };

const char* to_string(ExtractionMethod method);

/// Dense affine classifier f(x) = U x + b.
struct AffineMap {
  Tensor u;  // [k, d]
  Tensor b;  // [k]
  std::string source_model_id;
  ExtractionMethod method = ExtractionMethod::kBackwardPass;

  std::size_t num_classes() const { return u.dim(0); }
  std::size_t input_dim() const { return u.dim(1); }
  /// U x + b for a single (flattened) input.
  Tensor apply(const Tensor& x) const;
};

/// Activation-free companion of `model`. Throws ArgumentError naming any
/// layer the transform does not understand.
Model linearize(const Model& model);

/// True when the model contains no ReLU, max-pool or dropout layer.
bool is_linear(const Model& model);

/// U from one backward pass per class at a seeded standard-normal point;
/// b = forward(0). The model must already be linear.
AffineMap extract_u(const Model& linear_model, std::uint64_t seed = 0);

/// Oracle: column j of U is forward(e_j) - forward(0). Costs d forward passes.
AffineMap extract_u_basis_probe(const Model& linear_model);

/// Container with magic "UAPA": manifest (k, d, method, source model hash)
/// followed by the U and b blobs.
void save_affine_map(const AffineMap& map, const std::filesystem::path& path);
AffineMap load_affine_map(const std::filesystem::path& path);

}  // namespace uap

#endif  // UAP_LINEARIZER_HPP_

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

#include "uap/architectures.hpp"

#include <string>

#include "uap/error.hpp"

namespace uap {

Architecture mnist_cnn(const Shape& input_shape, std::size_t num_classes) {
  return {"mnist-cnn",
          input_shape,
          {LayerSpec::conv2d(32, 3), LayerSpec::relu(), LayerSpec::max_pool(2, 2),
           LayerSpec::conv2d(64, 3), LayerSpec::relu(), LayerSpec::max_pool(2, 2),
           LayerSpec::flatten(), LayerSpec::affine(1024), LayerSpec::relu(),
           LayerSpec::affine(num_classes)},
          num_classes};
}

Architecture cifar_cnn(const Shape& input_shape, std::size_t num_classes,
                       double drop_probability) {
  return {"cifar-cnn",
          input_shape,
          {LayerSpec::conv2d(32, 3, 1, 1), LayerSpec::relu(),
           LayerSpec::conv2d(64, 3, 1, 1), LayerSpec::relu(), LayerSpec::avg_pool(2, 2),
           LayerSpec::conv2d(128, 3, 1, 1), LayerSpec::relu(), LayerSpec::avg_pool(2, 2),
           LayerSpec::conv2d(128, 3, 1, 1), LayerSpec::relu(),
           LayerSpec::dropout(drop_probability), LayerSpec::flatten(),
           LayerSpec::affine(1500), LayerSpec::relu(), LayerSpec::dropout(drop_probability),
           LayerSpec::affine(num_classes)},
          num_classes};
}

Architecture mlp(const Shape& input_shape, std::size_t num_classes,
                 const std::vector<std::size_t>& hidden) {
  Architecture a{"mlp", input_shape, {LayerSpec::flatten()}, num_classes};
  for (std::size_t units : hidden) {
    a.layers.push_back(LayerSpec::affine(units));
    a.layers.push_back(LayerSpec::relu());
  }
  a.layers.push_back(LayerSpec::affine(num_classes));
  return a;
}

Architecture linear_classifier(const Shape& input_shape, std::size_t num_classes) {
  return {"linear", input_shape, {LayerSpec::flatten(), LayerSpec::affine(num_classes)},
          num_classes};
}

Architecture architecture_by_name(std::string_view name, const Shape& input_shape,
                                  std::size_t num_classes) {
  if (name == "mnist-cnn") return mnist_cnn(input_shape, num_classes);
  if (name == "cifar-cnn") return cifar_cnn(input_shape, num_classes);
  if (name == "mlp") return mlp(input_shape, num_classes);
  if (name == "linear") return linear_classifier(input_shape, num_classes);
  throw ArgumentError("unknown architecture '" + std::string(name) + "'");
}

}  // namespace uap

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

#ifndef UAP_ARCHITECTURES_HPP_
#define UAP_ARCHITECTURES_HPP_

#include <string_view>
#include <vector>

#include "uap/model.hpp"

namespace uap {

/// 32C3x3 - maxpool2 - 64C3x3 - maxpool2 - fc1024 - fc(k), ReLU activations.
Architecture mnist_cnn(const Shape& input_shape, std::size_t num_classes);

/// 32C3 - 64C3 - avgpool - 128C3 - avgpool - 128C3 - dropout - fc1500 -
/// dropout - fc(k); all convolutions padded to preserve extent.
Architecture cifar_cnn(const Shape& input_shape, std::size_t num_classes,
                       double drop_probability = 0.5);

/// Fully connected network with ReLU hidden layers.
Architecture mlp(const Shape& input_shape, std::size_t num_classes,
                 const std::vector<std::size_t>& hidden = {256, 256});

/// Single affine layer (multinomial logistic regression).
Architecture linear_classifier(const Shape& input_shape, std::size_t num_classes);

/// "mnist-cnn", "cifar-cnn", "mlp" or "linear".
Architecture architecture_by_name(std::string_view name, const Shape& input_shape,
                                  std::size_t num_classes);

}  // namespace uap

#endif  // UAP_ARCHITECTURES_HPP_

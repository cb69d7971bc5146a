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

#ifndef UAP_MODEL_IO_HPP_
#define UAP_MODEL_IO_HPP_

#include <filesystem>
#include <string>

#include "uap/model.hpp"

namespace uap {

/// Model file: magic "UAPM", u32 LE version 1, u32 LE manifest length, JSON
/// manifest (layers, k, d, input shape, metadata, tensor shapes), then the
/// parameter tensors as float32 LE in manifest order.
void save_model(const Model& model, const std::filesystem::path& path);

/// Throws FormatError with a distinct kind for bad magic, version mismatch,
/// manifest/blob length disagreement, non-finite parameters and manifest
/// inconsistencies (e.g. declared k vs. final layer rows).
Model load_model(const std::filesystem::path& path);

/// Stable content hash of layers and parameters (metadata excluded).
std::string model_id(const Model& model);

}  // namespace uap

#endif  // UAP_MODEL_IO_HPP_

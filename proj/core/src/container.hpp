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

// Shared binary container used by the model (UAPM), affine map (UAPA) and
// perturbation (UAPP) files:
//
//   bytes 0-3   magic
//   bytes 4-7   format version, u32 little-endian (1)
//   bytes 8-11  manifest byte length, u32 little-endian
//   manifest    UTF-8 JSON; its "tensors" array lists every blob's shape
//   blobs       float32 little-endian, row-major, in manifest order

#ifndef UAP_SRC_CONTAINER_HPP_
#define UAP_SRC_CONTAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uap/tensor.hpp"

namespace uap::detail {

inline constexpr std::uint32_t kContainerVersion = 1;

struct Container {
  nlohmann::json manifest;
  std::vector<Tensor> tensors;
};

/// Writes the container; the "tensors" manifest entry is filled in here.
void write_container(const std::filesystem::path& path, std::string_view magic,
                     nlohmann::json manifest, const std::vector<const Tensor*>& tensors);

/// Reads and validates framing, lengths and finiteness. Throws FormatError
/// (or IoError when the file cannot be read); never returns partial data.
Container read_container(const std::filesystem::path& path, std::string_view magic);

/// 64-bit FNV-1a, rendered as 16 hex digits.
class Fnv1a {
 public:
  void update(const void* data, std::size_t bytes);
  void update(std::string_view s) { update(s.data(), s.size()); }
  void update(const Tensor& t) { update(t.data().data(), t.size() * sizeof(float)); }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace uap::detail

#endif  // UAP_SRC_CONTAINER_HPP_

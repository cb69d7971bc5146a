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

#include "container.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "uap/error.hpp"

namespace uap::detail {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string context(const std::filesystem::path& path) { return path.string() + ": "; }

}  // namespace

void write_container(const std::filesystem::path& path, std::string_view magic,
                     nlohmann::json manifest, const std::vector<const Tensor*>& tensors) {
  auto shapes = nlohmann::json::array();
  for (const Tensor* t : tensors) shapes.push_back(t->shape());
  manifest["tensors"] = std::move(shapes);
  const std::string text = manifest.dump();

  std::string bytes;
  bytes.append(magic);
  put_u32(bytes, kContainerVersion);
  put_u32(bytes, static_cast<std::uint32_t>(text.size()));
  bytes.append(text);
  for (const Tensor* t : tensors) {
    for (float v : t->data()) put_u32(bytes, std::bit_cast<std::uint32_t>(v));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(context(path) + "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(context(path) + "write failed");
}

Container read_container(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(context(path) + "cannot open for reading");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), magic.data(), 4) != 0) {
    throw FormatError(FormatErrorKind::kBadMagic,
                      context(path) + "expected magic '" + std::string(magic) + "'");
  }
  if (bytes.size() < 12) {
    throw FormatError(FormatErrorKind::kLengthMismatch, context(path) + "truncated header");
  }
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kContainerVersion) {
    throw FormatError(FormatErrorKind::kVersionMismatch,
                      context(path) + "version " + std::to_string(version) +
                          ", supported " + std::to_string(kContainerVersion));
  }
  const std::size_t manifest_len = get_u32(bytes.data() + 8);
  if (12 + manifest_len > bytes.size()) {
    throw FormatError(FormatErrorKind::kLengthMismatch,
                      context(path) + "manifest length " + std::to_string(manifest_len) +
                          " exceeds file size " + std::to_string(bytes.size()));
  }

  Container c;
  try {
    c.manifest = nlohmann::json::parse(bytes.begin() + 12,
                                       bytes.begin() + 12 + static_cast<std::ptrdiff_t>(manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrorKind::kMalformed, context(path) + "manifest: " + e.what());
  }
  if (!c.manifest.is_object() || !c.manifest.contains("tensors") ||
      !c.manifest["tensors"].is_array()) {
    throw FormatError(FormatErrorKind::kMalformed, context(path) + "manifest lacks 'tensors'");
  }

  std::vector<Shape> shapes;
  std::size_t floats = 0;
  try {
    for (const auto& s : c.manifest["tensors"]) {
      Shape shape = s.get<Shape>();
      if (shape.empty() || shape_size(shape) == 0) {
        throw FormatError(FormatErrorKind::kMalformed,
                          context(path) + "empty tensor shape in manifest");
      }
      floats += shape_size(shape);
      shapes.push_back(std::move(shape));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrorKind::kMalformed, context(path) + "tensor shapes: " + e.what());
  }
  const std::size_t payload = bytes.size() - 12 - manifest_len;
  if (payload != floats * 4) {
    throw FormatError(FormatErrorKind::kLengthMismatch,
                      context(path) + "manifest declares " + std::to_string(floats * 4) +
                          " blob bytes, file holds " + std::to_string(payload));
  }

  const unsigned char* p = bytes.data() + 12 + manifest_len;
  for (Shape& shape : shapes) {
    std::vector<float> values(shape_size(shape));
    for (float& v : values) {
      v = std::bit_cast<float>(get_u32(p));
      p += 4;
      if (!std::isfinite(v)) {
        throw FormatError(FormatErrorKind::kNonFinite,
                          context(path) + "tensor " + std::to_string(c.tensors.size()) +
                              " holds a non-finite value");
      }
    }
    c.tensors.emplace_back(std::move(shape), std::move(values));
  }
  return c;
}

void Fnv1a::update(const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    state_ ^= p[i];
    state_ *= 0x100000001b3ULL;
  }
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

}  // namespace uap::detail

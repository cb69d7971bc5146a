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

#include "uap/linearizer.hpp"

#include <algorithm>

#include "container.hpp"
#include "uap/error.hpp"
#include "uap/kernels.hpp"
#include "uap/model_io.hpp"
#include "uap/rng.hpp"

namespace uap {

namespace {

constexpr std::string_view kMapMagic = "UAPA";
// Basis vectors pushed through the network per forward batch.
constexpr std::size_t kProbeBatch = 128;

}  // namespace

const char* to_string(ExtractionMethod method) {
  return method == ExtractionMethod::kBackwardPass ? "backward_pass" : "basis_probe";
}

Tensor AffineMap::apply(const Tensor& x) const {
  return affine_forward(x.reshaped({x.size()}), u, b);
}

bool is_linear(const Model& model) {
  return std::none_of(model.layers().begin(), model.layers().end(), [](const LayerSpec& s) {
    return s.kind == LayerKind::kRelu || s.kind == LayerKind::kMaxPool ||
           s.kind == LayerKind::kDropout;
  });
}

Model linearize(const Model& model) {
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const LayerSpec& s = model.layers()[i];
    switch (s.kind) {
      case LayerKind::kAffine:
      case LayerKind::kConv2d:
      case LayerKind::kAvgPool:
      case LayerKind::kFlatten:
        layers.push_back(s);
        break;
      case LayerKind::kMaxPool:
        layers.push_back(LayerSpec::avg_pool(s.window, s.stride));
        break;
      case LayerKind::kRelu:
      case LayerKind::kDropout:
        break;
      default:
        throw ArgumentError("cannot linearize layer " + std::to_string(i) + " (" +
                            to_string(s.kind) + ")");
    }
  }
  ModelMetadata md = model.metadata();
  md.origin = md.origin.empty() ? "linearized" : md.origin + "+linearized";
  return Model(model.input_shape(), std::move(layers), model.params(), model.num_classes(),
               std::move(md));
}

namespace {

void require_linear(const Model& m) {
  if (!is_linear(m)) {
    throw ArgumentError("model contains non-linear layers; call linearize() first");
  }
}

Tensor offset_at_origin(const Model& m) {
  return m.forward(Tensor({m.input_dim()}));
}

}  // namespace

AffineMap extract_u(const Model& linear_model, std::uint64_t seed) {
  require_linear(linear_model);
  Rng rng = Rng::stream(seed, 0x5eed);
  Tensor x({linear_model.input_dim()});
  for (float& v : x.mutable_data()) v = static_cast<float>(rng.normal());
  AffineMap map;
  map.u = input_jacobian(linear_model, x);
  if (!all_finite(map.u)) throw NumericError("non-finite entries in extracted U");
  map.b = offset_at_origin(linear_model);
  map.source_model_id = model_id(linear_model);
  map.method = ExtractionMethod::kBackwardPass;
  return map;
}

AffineMap extract_u_basis_probe(const Model& linear_model) {
  require_linear(linear_model);
  const std::size_t d = linear_model.input_dim();
  const std::size_t k = linear_model.num_classes();
  const Tensor b = offset_at_origin(linear_model);
  Tensor u({k, d});
  for (std::size_t first = 0; first < d; first += kProbeBatch) {
    const std::size_t count = std::min(kProbeBatch, d - first);
    Tensor basis({count, d});
    for (std::size_t j = 0; j < count; ++j) basis[j * d + first + j] = 1.0f;
    const Tensor out = linear_model.forward(basis);
    for (std::size_t j = 0; j < count; ++j) {
      for (std::size_t i = 0; i < k; ++i) {
        u[i * d + first + j] = out[j * k + i] - b[i];
      }
    }
  }
  AffineMap map;
  map.u = std::move(u);
  map.b = b;
  map.source_model_id = model_id(linear_model);
  map.method = ExtractionMethod::kBasisProbe;
  return map;
}

void save_affine_map(const AffineMap& map, const std::filesystem::path& path) {
  nlohmann::json manifest{{"format", "uapa"},
                          {"k", map.num_classes()},
                          {"d", map.input_dim()},
                          {"method", to_string(map.method)},
                          {"source_model", map.source_model_id}};
  detail::write_container(path, kMapMagic, std::move(manifest), {&map.u, &map.b});
}

AffineMap load_affine_map(const std::filesystem::path& path) {
  detail::Container c = detail::read_container(path, kMapMagic);
  const std::string where = path.string() + ": ";
  AffineMap map;
  std::size_t k = 0;
  std::size_t d = 0;
  try {
    k = c.manifest.at("k").get<std::size_t>();
    d = c.manifest.at("d").get<std::size_t>();
    const std::string method = c.manifest.at("method").get<std::string>();
    if (method == "backward_pass") {
      map.method = ExtractionMethod::kBackwardPass;
    } else if (method == "basis_probe") {
      map.method = ExtractionMethod::kBasisProbe;
    } else {
      throw FormatError(FormatErrorKind::kMalformed, where + "unknown method " + method);
    }
    map.source_model_id = c.manifest.value("source_model", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrorKind::kMalformed, where + "manifest: " + e.what());
  }
  if (c.tensors.size() != 2 || c.tensors[0].shape() != Shape{k, d} ||
      c.tensors[1].shape() != Shape{k}) {
    throw FormatError(FormatErrorKind::kConsistency,
                      where + "expected U [" + std::to_string(k) + "x" + std::to_string(d) +
                          "] and b [" + std::to_string(k) + "]");
  }
  map.u = std::move(c.tensors[0]);
  map.b = std::move(c.tensors[1]);
  return map;
}

}  // namespace uap

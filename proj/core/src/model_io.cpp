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

#include "uap/model_io.hpp"

#include "container.hpp"
#include "uap/error.hpp"

namespace uap {

namespace {

using nlohmann::json;

constexpr std::string_view kModelMagic = "UAPM";

json layer_to_json(const LayerSpec& s) {
  json j{{"kind", to_string(s.kind)}};
  switch (s.kind) {
    case LayerKind::kAffine:
      j["units"] = s.units;
      break;
    case LayerKind::kConv2d:
      j["units"] = s.units;
      j["kernel"] = s.kernel;
      j["stride"] = s.stride;
      j["padding"] = s.padding;
      break;
    case LayerKind::kMaxPool:
    case LayerKind::kAvgPool:
      j["window"] = s.window;
      j["stride"] = s.stride;
      break;
    case LayerKind::kDropout:
      j["drop_probability"] = s.drop_probability;
      break;
    case LayerKind::kRelu:
    case LayerKind::kFlatten:
      break;
  }
  return j;
}

LayerSpec layer_from_json(const json& j) {
  LayerSpec s;
  s.kind = parse_layer_kind(j.at("kind").get<std::string>());
  s.units = j.value("units", std::size_t{0});
  s.kernel = j.value("kernel", std::size_t{0});
  s.stride = j.value("stride", std::size_t{1});
  s.padding = j.value("padding", std::size_t{0});
  s.window = j.value("window", std::size_t{0});
  s.drop_probability = j.value("drop_probability", 0.0);
  return s;
}

json layers_json(const Model& m) {
  json layers = json::array();
  for (const LayerSpec& s : m.layers()) layers.push_back(layer_to_json(s));
  return layers;
}

json metadata_json(const ModelMetadata& md) {
  json j{{"name", md.name}, {"seed", md.seed}, {"epochs", md.epochs}, {"origin", md.origin}};
  if (md.train_accuracy) j["train_accuracy"] = *md.train_accuracy;
  if (md.test_accuracy) j["test_accuracy"] = *md.test_accuracy;
  return j;
}

ModelMetadata metadata_from_json(const json& j) {
  ModelMetadata md;
  md.name = j.value("name", std::string{});
  md.seed = j.value("seed", std::uint64_t{0});
  md.epochs = j.value("epochs", 0);
  md.origin = j.value("origin", std::string{});
  if (j.contains("train_accuracy")) md.train_accuracy = j["train_accuracy"].get<double>();
  if (j.contains("test_accuracy")) md.test_accuracy = j["test_accuracy"].get<double>();
  return md;
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
  json manifest{{"format", "uapm"},
                {"k", model.num_classes()},
                {"d", model.input_dim()},
                {"input_shape", model.input_shape()},
                {"layers", layers_json(model)},
                {"metadata", metadata_json(model.metadata())}};
  std::vector<const Tensor*> tensors;
  for (const LayerParams& p : model.params()) {
    tensors.push_back(&p.weight);
    tensors.push_back(&p.bias);
  }
  detail::write_container(path, kModelMagic, std::move(manifest), tensors);
}

Model load_model(const std::filesystem::path& path) {
  detail::Container c = detail::read_container(path, kModelMagic);
  const std::string where = path.string() + ": ";
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::size_t k = 0;
  std::size_t d = 0;
  ModelMetadata md;
  try {
    input_shape = c.manifest.at("input_shape").get<Shape>();
    k = c.manifest.at("k").get<std::size_t>();
    d = c.manifest.at("d").get<std::size_t>();
    for (const json& j : c.manifest.at("layers")) layers.push_back(layer_from_json(j));
    if (c.manifest.contains("metadata")) md = metadata_from_json(c.manifest["metadata"]);
  } catch (const json::exception& e) {
    throw FormatError(FormatErrorKind::kMalformed, where + "manifest: " + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(FormatErrorKind::kMalformed, where + e.what());
  }
  if (shape_size(input_shape) != d) {
    throw FormatError(FormatErrorKind::kConsistency,
                      where + "declared d=" + std::to_string(d) + " but input shape " +
                          shape_string(input_shape));
  }
  if (c.tensors.size() % 2 != 0) {
    throw FormatError(FormatErrorKind::kConsistency,
                      where + "parameter tensors must come in weight/bias pairs");
  }
  std::vector<LayerParams> params;
  for (std::size_t i = 0; i < c.tensors.size(); i += 2) {
    params.push_back({std::move(c.tensors[i]), std::move(c.tensors[i + 1])});
  }
  try {
    return Model(std::move(input_shape), std::move(layers), std::move(params), k,
                 std::move(md));
  } catch (const Error& e) {
    throw FormatError(FormatErrorKind::kConsistency, where + e.what());
  }
}

std::string model_id(const Model& model) {
  detail::Fnv1a h;
  h.update(json{{"input_shape", model.input_shape()},
                {"k", model.num_classes()},
                {"layers", layers_json(model)}}
               .dump());
  for (const LayerParams& p : model.params()) {
    h.update(p.weight);
    h.update(p.bias);
  }
  return h.hex();
}

}  // namespace uap

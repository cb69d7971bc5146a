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

#ifndef UAP_MODEL_HPP_
#define UAP_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "uap/tensor.hpp"

namespace uap {

class Rng;

enum class LayerKind { kAffine, kConv2d, kRelu, kMaxPool, kAvgPool, kFlatten, kDropout };

const char* to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::kFlatten;
  std::size_t units = 0;   // affine outputs or conv output channels
  std::size_t kernel = 0;  // square conv kernel extent
  std::size_t stride = 1;  // conv and pool
  std::size_t padding = 0; // conv only
  std::size_t window = 0;  // pool only
  double drop_probability = 0.0;

  static LayerSpec affine(std::size_t units);
  static LayerSpec conv2d(std::size_t channels, std::size_t kernel,
                          std::size_t stride = 1, std::size_t padding = 0);
  static LayerSpec relu();
  static LayerSpec max_pool(std::size_t window, std::size_t stride);
  static LayerSpec avg_pool(std::size_t window, std::size_t stride);
  static LayerSpec flatten();
  static LayerSpec dropout(double probability);

  bool parametric() const {
    return kind == LayerKind::kAffine || kind == LayerKind::kConv2d;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Weight and bias of one parametric layer.
struct LayerParams {
  Tensor weight;
  Tensor bias;
};

struct Architecture {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::size_t num_classes = 0;
};

struct ModelMetadata {
  std::string name;
  std::uint64_t seed = 0;
  int epochs = 0;
  std::optional<double> train_accuracy;
  std::optional<double> test_accuracy;
  /// Free-form provenance, e.g. "linearized" or "adversarial:pgd".
  std::string origin;

  friend bool operator==(const ModelMetadata&, const ModelMetadata&) = default;
};

enum class Mode { kInference, kTraining };

namespace detail {
struct PreparedLayers;
}

/// Activations recorded by a batched forward pass, consumed by backward().
struct ForwardTrace {
  std::vector<Tensor> inputs;    // input of every layer, batch-leading
  std::vector<Tensor> dropout;   // per layer: scale mask or empty
  Tensor logits;                 // [n, k]
};

struct ModelGradients {
  Tensor input;                     // same shape as the traced batch
  std::vector<LayerParams> params;  // empty unless requested
};

/// Ordered layer stack with its parameters. Immutable once constructed; all
/// const member functions are safe to call concurrently.
class Model {
 public:
  /// Validates shape compatibility of every adjacent layer pair and that the
  /// final layer emits `num_classes` logits.
  Model(Shape input_shape, std::vector<LayerSpec> layers,
        std::vector<LayerParams> params, std::size_t num_classes,
        ModelMetadata metadata = {});

  /// Fresh parameters: weights uniform in +-sqrt(6/(fan_in+fan_out)), zero bias.
  static Model initialize(const Architecture& arch, Rng& rng);

  const Shape& input_shape() const noexcept { return input_shape_; }
  std::size_t input_dim() const noexcept { return shape_size(input_shape_); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const std::vector<LayerParams>& params() const noexcept { return params_; }
  const ModelMetadata& metadata() const noexcept { return metadata_; }
  /// Output shape of each layer (per sample).
  const std::vector<Shape>& layer_output_shapes() const noexcept { return shapes_; }
  std::size_t parameter_count() const;

  Model with_params(std::vector<LayerParams> params) const;
  Model with_metadata(ModelMetadata metadata) const;

  /// Logits. A single sample (input shape or flat [d]) yields [k]; a batch
  /// [n, ...] yields [n, k]. Dropout is the identity here.
  Tensor forward(const Tensor& x) const;
  /// argmax of the logits, lowest index on ties.
  std::size_t predict(const Tensor& x) const;
  std::vector<std::size_t> predict_batch(const Tensor& batch) const;

  /// Batched forward pass that records what backward() needs. `dropout_rng`
  /// is required in training mode when the model has dropout layers.
  ForwardTrace trace(const Tensor& batch, Mode mode, Rng* dropout_rng = nullptr) const;
  ModelGradients backward(const ForwardTrace& trace, const Tensor& grad_logits,
                          bool param_grads) const;

  /// Reshapes x to [n, input_shape...]; accepts a single sample or a batch.
  Tensor as_batch(const Tensor& x) const;

 private:
  Shape input_shape_;
  std::vector<LayerSpec> layers_;
  std::vector<LayerParams> params_;
  std::vector<std::size_t> param_index_;  // layer -> params_ slot (or npos)
  std::vector<Shape> shapes_;
  std::size_t num_classes_ = 0;
  ModelMetadata metadata_;
  std::shared_ptr<const detail::PreparedLayers> prepared_;
};

std::size_t argmax(std::span<const float> logits);

/// Scalar whose input gradient is requested.
struct LogitSelector {
  std::size_t index = 0;
};
struct CrossEntropySelector {
  std::size_t label = 0;
};
using ScalarSelector = std::variant<LogitSelector, CrossEntropySelector>;

/// Exact gradient of the selected scalar with respect to a single input x;
/// returned with x's shape.
Tensor input_gradient(const Model& model, const Tensor& x, ScalarSelector selector);

/// Rows are the input gradients of every logit at x: [k, d].
Tensor input_jacobian(const Model& model, const Tensor& x);

/// input_jacobian for every sample of a batch in one pass: [n, k, d].
Tensor input_jacobians(const Model& model, const Tensor& batch);

/// Per-example gradients of CE(logits_i, labels_i) for a batch; same shape
/// as the batch.
Tensor cross_entropy_input_gradients(const Model& model, const Tensor& batch,
                                     std::span<const std::size_t> labels);

/// Mean cross-entropy over the batch and its gradient w.r.t. the logits.
struct CrossEntropy {
  double loss = 0.0;
  Tensor grad_logits;  // [n, k], already divided by n
  std::size_t correct = 0;
};
CrossEntropy softmax_cross_entropy(const Tensor& logits,
                                   std::span<const std::size_t> labels);

}  // namespace uap

#endif  // UAP_MODEL_HPP_

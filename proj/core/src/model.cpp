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

#include "uap/model.hpp"

#include <cmath>
#include <limits>
#include <variant>

#include "dense_ops.hpp"
#include "uap/error.hpp"
#include "uap/rng.hpp"

namespace uap {

namespace detail {

using PreparedOp = std::variant<std::monostate, DenseAffine, DenseConv>;

struct PreparedLayers {
  std::vector<PreparedOp> ops;
};

}  // namespace detail

namespace {

constexpr std::size_t kNoParams = std::numeric_limits<std::size_t>::max();

Shape with_batch(std::size_t n, const Shape& s) {
  Shape out{n};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::string layer_name(std::size_t index, LayerKind kind) {
  return "layer " + std::to_string(index) + " (" + to_string(kind) + ")";
}

}  // namespace

const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kAffine:
      return "affine";
    case LayerKind::kConv2d:
      return "conv2d";
    case LayerKind::kRelu:
      return "relu";
    case LayerKind::kMaxPool:
      return "maxpool";
    case LayerKind::kAvgPool:
      return "avgpool";
    case LayerKind::kFlatten:
      return "flatten";
    case LayerKind::kDropout:
      return "dropout";
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (LayerKind k : {LayerKind::kAffine, LayerKind::kConv2d, LayerKind::kRelu,
                      LayerKind::kMaxPool, LayerKind::kAvgPool, LayerKind::kFlatten,
                      LayerKind::kDropout}) {
    if (name == to_string(k)) return k;
  }
  throw ArgumentError("unsupported layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::affine(std::size_t units) {
  LayerSpec s;
  s.kind = LayerKind::kAffine;
  s.units = units;
  return s;
}

LayerSpec LayerSpec::conv2d(std::size_t channels, std::size_t kernel,
                            std::size_t stride, std::size_t padding) {
  LayerSpec s;
  s.kind = LayerKind::kConv2d;
  s.units = channels;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::kRelu;
  return s;
}

LayerSpec LayerSpec::max_pool(std::size_t window, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::kMaxPool;
  s.window = window;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::avg_pool(std::size_t window, std::size_t stride) {
  LayerSpec s = max_pool(window, stride);
  s.kind = LayerKind::kAvgPool;
  return s;
}

LayerSpec LayerSpec::flatten() { return LayerSpec{}; }

LayerSpec LayerSpec::dropout(double probability) {
  LayerSpec s;
  s.kind = LayerKind::kDropout;
  s.drop_probability = probability;
  return s;
}

Model::Model(Shape input_shape, std::vector<LayerSpec> layers,
             std::vector<LayerParams> params, std::size_t num_classes,
             ModelMetadata metadata)
    : input_shape_(std::move(input_shape)),
      layers_(std::move(layers)),
      params_(std::move(params)),
      num_classes_(num_classes),
      metadata_(std::move(metadata)) {
  if (num_classes_ < 2) throw ArgumentError("a model needs at least 2 classes");
  if (input_shape_.empty() || shape_size(input_shape_) == 0) {
    throw DimensionError("model input shape must be non-empty");
  }
  if (layers_.empty()) throw ArgumentError("a model needs at least one layer");

  auto prepared = std::make_shared<detail::PreparedLayers>();
  Shape cur = input_shape_;
  std::size_t next_param = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& spec = layers_[i];
    detail::PreparedOp op;
    param_index_.push_back(kNoParams);
    if (spec.parametric()) {
      if (next_param >= params_.size()) {
        throw DimensionError(layer_name(i, spec.kind) + " has no parameter tensors");
      }
      param_index_.back() = next_param;
    }
    switch (spec.kind) {
      case LayerKind::kAffine: {
        if (cur.size() != 1) {
          throw DimensionError(layer_name(i, spec.kind) + " needs a flat input, got " +
                               shape_string(cur));
        }
        const LayerParams& p = params_[next_param++];
        if (p.weight.shape() != Shape{spec.units, cur[0]}) {
          throw DimensionError(layer_name(i, spec.kind) + " weight " +
                               shape_string(p.weight.shape()) + " vs expected " +
                               shape_string({spec.units, cur[0]}));
        }
        op = detail::DenseAffine(p.weight, p.bias);
        cur = {spec.units};
        break;
      }
      case LayerKind::kConv2d: {
        if (cur.size() != 3) {
          throw DimensionError(layer_name(i, spec.kind) + " needs [C,H,W] input, got " +
                               shape_string(cur));
        }
        const LayerParams& p = params_[next_param++];
        const Shape expect{spec.units, cur[0], spec.kernel, spec.kernel};
        if (p.weight.shape() != expect) {
          throw DimensionError(layer_name(i, spec.kind) + " kernels " +
                               shape_string(p.weight.shape()) + " vs expected " +
                               shape_string(expect));
        }
        detail::DenseConv conv(p.weight, p.bias, {spec.stride, spec.padding});
        const detail::Plane out = detail::conv_output_plane(conv, {cur[1], cur[2]});
        op = std::move(conv);
        cur = {spec.units, out.h, out.w};
        break;
      }
      case LayerKind::kMaxPool:
      case LayerKind::kAvgPool: {
        if (cur.size() != 3) {
          throw DimensionError(layer_name(i, spec.kind) + " needs [C,H,W] input, got " +
                               shape_string(cur));
        }
        const detail::Plane out =
            detail::pool_output_plane({cur[1], cur[2]}, spec.window, spec.stride);
        cur = {cur[0], out.h, out.w};
        break;
      }
      case LayerKind::kFlatten:
        cur = {shape_size(cur)};
        break;
      case LayerKind::kDropout:
        if (!(spec.drop_probability >= 0.0 && spec.drop_probability < 1.0)) {
          throw ArgumentError(layer_name(i, spec.kind) +
                              " probability must lie in [0, 1)");
        }
        break;
      case LayerKind::kRelu:
        break;
    }
    prepared->ops.push_back(std::move(op));
    shapes_.push_back(cur);
  }
  if (next_param != params_.size()) {
    throw DimensionError("model has " + std::to_string(params_.size()) +
                         " parameter sets for " + std::to_string(next_param) +
                         " parametric layers");
  }
  if (cur != Shape{num_classes_}) {
    throw DimensionError("final layer emits " + shape_string(cur) + ", expected [" +
                         std::to_string(num_classes_) + "] logits");
  }
  prepared_ = std::move(prepared);
}

Model Model::initialize(const Architecture& arch, Rng& rng) {
  std::vector<LayerParams> params;
  Shape cur = arch.input_shape;
  for (const LayerSpec& spec : arch.layers) {
    if (spec.kind == LayerKind::kAffine) {
      if (cur.size() != 1) {
        throw DimensionError("affine layer needs a flat input, got " + shape_string(cur));
      }
      const double limit = std::sqrt(6.0 / static_cast<double>(cur[0] + spec.units));
      Tensor w({spec.units, cur[0]});
      for (float& v : w.mutable_data()) v = static_cast<float>(rng.uniform(-limit, limit));
      params.push_back({std::move(w), Tensor({spec.units})});
      cur = {spec.units};
    } else if (spec.kind == LayerKind::kConv2d) {
      if (cur.size() != 3) {
        throw DimensionError("conv2d layer needs [C,H,W] input, got " + shape_string(cur));
      }
      const std::size_t area = spec.kernel * spec.kernel;
      const double limit =
          std::sqrt(6.0 / static_cast<double>((cur[0] + spec.units) * area));
      Tensor w({spec.units, cur[0], spec.kernel, spec.kernel});
      for (float& v : w.mutable_data()) v = static_cast<float>(rng.uniform(-limit, limit));
      params.push_back({std::move(w), Tensor({spec.units})});
      cur = {spec.units, sweep_extent(cur[1], spec.kernel, spec.stride, spec.padding),
             sweep_extent(cur[2], spec.kernel, spec.stride, spec.padding)};
    } else if (spec.kind == LayerKind::kMaxPool || spec.kind == LayerKind::kAvgPool) {
      if (cur.size() != 3) {
        throw DimensionError("pool layer needs [C,H,W] input, got " + shape_string(cur));
      }
      cur = {cur[0], sweep_extent(cur[1], spec.window, spec.stride, 0),
             sweep_extent(cur[2], spec.window, spec.stride, 0)};
    } else if (spec.kind == LayerKind::kFlatten) {
      cur = {shape_size(cur)};
    }
  }
  ModelMetadata meta;
  meta.name = arch.name;
  return Model(arch.input_shape, arch.layers, std::move(params), arch.num_classes,
               std::move(meta));
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const LayerParams& p : params_) n += p.weight.size() + p.bias.size();
  return n;
}

Model Model::with_params(std::vector<LayerParams> params) const {
  return Model(input_shape_, layers_, std::move(params), num_classes_, metadata_);
}

Model Model::with_metadata(ModelMetadata metadata) const {
  Model copy = *this;
  copy.metadata_ = std::move(metadata);
  return copy;
}

Tensor Model::as_batch(const Tensor& x) const {
  const std::size_t d = input_dim();
  if (x.shape() == input_shape_ || (x.rank() == 1 && x.size() == d)) {
    return x.reshaped(with_batch(1, input_shape_));
  }
  if (x.rank() >= 2 && x.size() == x.dim(0) * d) {
    Shape tail(x.shape().begin() + 1, x.shape().end());
    if (tail == input_shape_ || tail == Shape{d}) {
      return x.reshaped(with_batch(x.dim(0), input_shape_));
    }
  }
  throw DimensionError("input " + shape_string(x.shape()) +
                       " does not match model input " + shape_string(input_shape_));
}

ForwardTrace Model::trace(const Tensor& batch_in, Mode mode, Rng* dropout_rng) const {
  ForwardTrace tr;
  Tensor cur = as_batch(batch_in);
  const std::size_t n = cur.dim(0);
  tr.inputs.reserve(layers_.size());
  tr.dropout.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& spec = layers_[i];
    const Shape& in_shape = i == 0 ? input_shape_ : shapes_[i - 1];
    Tensor out(with_batch(n, shapes_[i]));
    const float* x = cur.data().data();
    float* y = out.mutable_data().data();
    switch (spec.kind) {
      case LayerKind::kAffine:
        detail::affine_forward(std::get<detail::DenseAffine>(prepared_->ops[i]), x, n, y);
        break;
      case LayerKind::kConv2d:
        detail::conv_forward(std::get<detail::DenseConv>(prepared_->ops[i]), x, n,
                             {in_shape[1], in_shape[2]}, y);
        break;
      case LayerKind::kMaxPool:
      case LayerKind::kAvgPool:
        detail::pool_forward(
            spec.kind == LayerKind::kMaxPool ? PoolMode::kMax : PoolMode::kAvg,
            spec.window, spec.stride, x, n * in_shape[0], {in_shape[1], in_shape[2]}, y);
        break;
      case LayerKind::kRelu:
        detail::relu_forward(x, cur.size(), y);
        break;
      case LayerKind::kFlatten:
        std::copy(cur.data().begin(), cur.data().end(), y);
        break;
      case LayerKind::kDropout:
        if (mode == Mode::kTraining && spec.drop_probability > 0.0) {
          if (dropout_rng == nullptr) {
            throw ArgumentError("training-mode dropout needs a generator");
          }
          Tensor mask(cur.shape());
          const float keep = static_cast<float>(1.0 / (1.0 - spec.drop_probability));
          for (float& m : mask.mutable_data()) {
            m = dropout_rng->uniform() < spec.drop_probability ? 0.0f : keep;
          }
          for (std::size_t j = 0; j < cur.size(); ++j) y[j] = x[j] * mask[j];
          tr.dropout[i] = std::move(mask);
        } else {
          std::copy(cur.data().begin(), cur.data().end(), y);
        }
        break;
    }
    tr.inputs.push_back(std::move(cur));
    cur = std::move(out);
  }
  tr.logits = std::move(cur);
  return tr;
}

ModelGradients Model::backward(const ForwardTrace& tr, const Tensor& grad_logits,
                               bool param_grads) const {
  if (tr.inputs.size() != layers_.size()) {
    throw ArgumentError("trace does not belong to this model");
  }
  require_same_shape(tr.logits, grad_logits, "logit gradient");
  const std::size_t n = tr.logits.dim(0);
  ModelGradients grads;
  if (param_grads) {
    for (const LayerParams& p : params_) {
      grads.params.push_back({Tensor(p.weight.shape()), Tensor(p.bias.shape())});
    }
  }
  Tensor g = grad_logits;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const LayerSpec& spec = layers_[i];
    const Tensor& x = tr.inputs[i];
    Tensor gx(x.shape());
    const Shape& in_shape = i == 0 ? input_shape_ : shapes_[i - 1];
    float* pw = nullptr;
    float* pb = nullptr;
    if (param_grads && spec.parametric()) {
      LayerParams& slot = grads.params[param_index_[i]];
      pw = slot.weight.mutable_data().data();
      pb = slot.bias.mutable_data().data();
    }
    switch (spec.kind) {
      case LayerKind::kAffine:
        detail::affine_backward(std::get<detail::DenseAffine>(prepared_->ops[i]),
                                x.data().data(), g.data().data(), n,
                                gx.mutable_data().data(), pw, pb);
        break;
      case LayerKind::kConv2d:
        detail::conv_backward(std::get<detail::DenseConv>(prepared_->ops[i]),
                              x.data().data(), g.data().data(), n,
                              {in_shape[1], in_shape[2]}, gx.mutable_data().data(),
                              pw, pb);
        break;
      case LayerKind::kMaxPool:
      case LayerKind::kAvgPool:
        detail::pool_backward(
            spec.kind == LayerKind::kMaxPool ? PoolMode::kMax : PoolMode::kAvg,
            spec.window, spec.stride, x.data().data(), g.data().data(),
            n * in_shape[0], {in_shape[1], in_shape[2]}, gx.mutable_data().data());
        break;
      case LayerKind::kRelu:
        detail::relu_backward(x.data().data(), g.data().data(), x.size(),
                              gx.mutable_data().data());
        break;
      case LayerKind::kFlatten:
        std::copy(g.data().begin(), g.data().end(), gx.mutable_data().begin());
        break;
      case LayerKind::kDropout:
        if (!tr.dropout[i].empty()) {
          const Tensor& mask = tr.dropout[i];
          for (std::size_t j = 0; j < gx.size(); ++j) gx[j] = g[j] * mask[j];
        } else {
          std::copy(g.data().begin(), g.data().end(), gx.mutable_data().begin());
        }
        break;
    }
    g = std::move(gx);
  }
  grads.input = std::move(g);
  return grads;
}

Tensor Model::forward(const Tensor& x) const {
  const bool single = x.shape() == input_shape_ || (x.rank() == 1 && x.size() == input_dim());
  ForwardTrace tr = trace(x, Mode::kInference);
  if (single) return std::move(tr.logits).reshaped({num_classes_});
  return std::move(tr.logits);
}

std::size_t argmax(std::span<const float> logits) {
  if (logits.empty()) throw ArgumentError("argmax of empty logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

std::size_t Model::predict(const Tensor& x) const {
  const Tensor logits = forward(x);
  if (logits.rank() != 1) throw DimensionError("predict() takes a single sample");
  return argmax(logits.data());
}

std::vector<std::size_t> Model::predict_batch(const Tensor& batch) const {
  const Tensor logits = trace(batch, Mode::kInference).logits;
  const std::size_t n = logits.dim(0);
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = argmax(logits.data().subspan(i * num_classes_, num_classes_));
  }
  return out;
}

namespace {

void softmax_row(std::span<const float> logits, std::vector<double>& probs) {
  probs.resize(logits.size());
  double mx = logits[0];
  for (float v : logits) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    probs[j] = std::exp(static_cast<double>(logits[j]) - mx);
    sum += probs[j];
  }
  for (double& p : probs) p /= sum;
}

}  // namespace

Tensor input_gradient(const Model& model, const Tensor& x, ScalarSelector selector) {
  const std::size_t k = model.num_classes();
  const ForwardTrace tr = model.trace(x, Mode::kInference);
  if (tr.logits.dim(0) != 1) {
    throw DimensionError("input_gradient takes a single sample, got " +
                         shape_string(x.shape()));
  }
  Tensor g({1, k});
  if (const auto* logit = std::get_if<LogitSelector>(&selector)) {
    if (logit->index >= k) {
      throw ArgumentError("logit index " + std::to_string(logit->index) +
                          " outside [0, " + std::to_string(k) + ")");
    }
    g[logit->index] = 1.0f;
  } else {
    const auto& ce = std::get<CrossEntropySelector>(selector);
    if (ce.label >= k) {
      throw ArgumentError("label " + std::to_string(ce.label) + " outside [0, " +
                          std::to_string(k) + ")");
    }
    std::vector<double> probs;
    softmax_row(tr.logits.data(), probs);
    for (std::size_t j = 0; j < k; ++j) {
      g[j] = static_cast<float>(probs[j] - (j == ce.label ? 1.0 : 0.0));
    }
  }
  return model.backward(tr, g, false).input.reshaped(x.shape());
}

Tensor input_jacobian(const Model& model, const Tensor& x) {
  const std::size_t k = model.num_classes();
  const std::size_t d = model.input_dim();
  const Tensor one = model.as_batch(x);
  if (one.dim(0) != 1) throw DimensionError("input_jacobian takes a single sample");
  std::vector<float> rep;
  rep.reserve(k * d);
  for (std::size_t i = 0; i < k; ++i) {
    rep.insert(rep.end(), one.data().begin(), one.data().end());
  }
  const ForwardTrace tr =
      model.trace(Tensor({k, d}, std::move(rep)), Mode::kInference);
  Tensor eye({k, k});
  for (std::size_t i = 0; i < k; ++i) eye[i * k + i] = 1.0f;
  return model.backward(tr, eye, false).input.reshaped({k, d});
}

Tensor input_jacobians(const Model& model, const Tensor& batch) {
  const std::size_t k = model.num_classes();
  const std::size_t d = model.input_dim();
  const Tensor b = model.as_batch(batch);
  const std::size_t n = b.dim(0);
  // Each sample repeated k times; row (s, i) seeds logit i.
  std::vector<float> rep;
  rep.reserve(n * k * d);
  for (std::size_t s = 0; s < n; ++s) {
    const auto one = b.data().subspan(s * d, d);
    for (std::size_t i = 0; i < k; ++i) rep.insert(rep.end(), one.begin(), one.end());
  }
  const ForwardTrace tr = model.trace(Tensor({n * k, d}, std::move(rep)), Mode::kInference);
  Tensor seed({n * k, k});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < k; ++i) seed[(s * k + i) * k + i] = 1.0f;
  }
  return model.backward(tr, seed, false).input.reshaped({n, k, d});
}

Tensor cross_entropy_input_gradients(const Model& model, const Tensor& batch,
                                     std::span<const std::size_t> labels) {
  const ForwardTrace tr = model.trace(batch, Mode::kInference);
  const std::size_t n = tr.logits.dim(0);
  const std::size_t k = model.num_classes();
  if (labels.size() != n) {
    throw DimensionError("batch of " + std::to_string(n) + " with " +
                         std::to_string(labels.size()) + " labels");
  }
  Tensor g({n, k});
  std::vector<double> probs;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= k) throw ArgumentError("label outside [0, k)");
    softmax_row(tr.logits.data().subspan(i * k, k), probs);
    for (std::size_t j = 0; j < k; ++j) {
      g[i * k + j] = static_cast<float>(probs[j] - (j == labels[i] ? 1.0 : 0.0));
    }
  }
  return model.backward(tr, g, false).input.reshaped(batch.shape());
}

CrossEntropy softmax_cross_entropy(const Tensor& logits,
                                   std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw DimensionError("logits " + shape_string(logits.shape()) + " with " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = logits.dim(0);
  const std::size_t k = logits.dim(1);
  CrossEntropy out;
  out.grad_logits = Tensor({n, k});
  std::vector<double> probs;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = logits.data().subspan(i * k, k);
    if (labels[i] >= k) throw ArgumentError("label outside [0, k)");
    softmax_row(row, probs);
    out.loss -= std::log(std::max(probs[labels[i]], 1e-300));
    if (argmax(row) == labels[i]) ++out.correct;
    for (std::size_t j = 0; j < k; ++j) {
      out.grad_logits[i * k + j] =
          static_cast<float>((probs[j] - (j == labels[i] ? 1.0 : 0.0)) * inv_n);
    }
  }
  out.loss *= inv_n;
  return out;
}

}  // namespace uap

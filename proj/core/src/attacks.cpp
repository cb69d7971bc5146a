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

#include "uap/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "container.hpp"
#include "uap/error.hpp"
#include "uap/kernels.hpp"
#include "uap/parallel.hpp"
#include "uap/rng.hpp"

namespace uap {

namespace {

constexpr std::string_view kPerturbationMagic = "UAPP";
constexpr std::size_t kGradientBatch = 256;
// Images per batched Jacobian (each expands to k rows).
constexpr std::size_t kJacobianBatch = 32;

void require_epsilon(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ArgumentError("epsilon must be a finite value >= 0");
  }
}

double l1_row_difference(const Tensor& rows, std::size_t a, std::size_t b) {
  const std::size_t d = rows.dim(1);
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    s += std::fabs(static_cast<double>(rows[a * d + j]) - static_cast<double>(rows[b * d + j]));
  }
  return s;
}

Tensor flat(const Tensor& x) { return x.reshaped({x.size()}); }

}  // namespace

const char* to_string(PerturbationSource source) {
  switch (source) {
    case PerturbationSource::kUniversal:
      return "universal";
    case PerturbationSource::kA1:
      return "a1";
    case PerturbationSource::kBaseline:
      return "baseline";
    case PerturbationSource::kFgsm:
      return "fgsm";
    case PerturbationSource::kRandomSign:
      return "random";
  }
  return "unknown";
}

const char* to_string(PerturbationLayout layout) {
  switch (layout) {
    case PerturbationLayout::kPerClass:
      return "per_class";
    case PerturbationLayout::kPerExample:
      return "per_example";
    case PerturbationLayout::kShared:
      return "shared";
  }
  return "unknown";
}

PerturbationSource parse_perturbation_source(std::string_view name) {
  for (PerturbationSource s : {PerturbationSource::kUniversal, PerturbationSource::kA1,
                               PerturbationSource::kBaseline, PerturbationSource::kFgsm,
                               PerturbationSource::kRandomSign}) {
    if (name == to_string(s)) return s;
  }
  throw ArgumentError("unknown attack method '" + std::string(name) + "'");
}

const Tensor& PerturbationSet::for_example(std::size_t index, std::size_t label) const {
  switch (layout) {
    case PerturbationLayout::kPerClass:
      if (label >= vectors.size()) throw ArgumentError("label outside perturbation set");
      return vectors[label];
    case PerturbationLayout::kPerExample:
      if (index >= vectors.size()) throw ArgumentError("example outside perturbation set");
      return vectors[index];
    case PerturbationLayout::kShared:
      return vectors.at(0);
  }
  throw ArgumentError("invalid perturbation layout");
}

void PerturbationSet::validate() const {
  require_epsilon(epsilon);
  if (layout == PerturbationLayout::kPerClass && vectors.size() != num_classes) {
    throw DimensionError("per-class set holds " + std::to_string(vectors.size()) +
                         " vectors for k=" + std::to_string(num_classes));
  }
  if (layout == PerturbationLayout::kShared && vectors.size() != 1) {
    throw DimensionError("shared set must hold exactly one vector");
  }
  const float bound = static_cast<float>(epsilon) * (1.0f + 1e-6f);
  for (const Tensor& v : vectors) {
    if (v.shape() != Shape{dim}) {
      throw DimensionError("perturbation " + shape_string(v.shape()) + " vs d=" +
                           std::to_string(dim));
    }
    if (max_abs(v) > bound) throw NumericError("perturbation exceeds the max-norm budget");
  }
}

void save_perturbations(const PerturbationSet& set, const std::filesystem::path& path) {
  set.validate();
  nlohmann::json manifest{{"format", "uapp"},
                          {"k", set.num_classes},
                          {"d", set.dim},
                          {"epsilon", set.epsilon},
                          {"source", to_string(set.source)},
                          {"layout", to_string(set.layout)},
                          {"source_model", set.source_model_id},
                          {"seed", set.seed},
                          {"dataset", set.dataset_id},
                          {"count", set.vectors.size()}};
  std::vector<const Tensor*> blobs;
  for (const Tensor& v : set.vectors) blobs.push_back(&v);
  detail::write_container(path, kPerturbationMagic, std::move(manifest), blobs);
}

PerturbationSet load_perturbations(const std::filesystem::path& path) {
  detail::Container c = detail::read_container(path, kPerturbationMagic);
  const std::string where = path.string() + ": ";
  PerturbationSet set;
  try {
    set.num_classes = c.manifest.at("k").get<std::size_t>();
    set.dim = c.manifest.at("d").get<std::size_t>();
    set.epsilon = c.manifest.at("epsilon").get<double>();
    set.source = parse_perturbation_source(c.manifest.at("source").get<std::string>());
    const std::string layout = c.manifest.at("layout").get<std::string>();
    if (layout == "per_class") {
      set.layout = PerturbationLayout::kPerClass;
    } else if (layout == "per_example") {
      set.layout = PerturbationLayout::kPerExample;
    } else if (layout == "shared") {
      set.layout = PerturbationLayout::kShared;
    } else {
      throw FormatError(FormatErrorKind::kMalformed, where + "unknown layout " + layout);
    }
    set.source_model_id = c.manifest.value("source_model", std::string{});
    set.seed = c.manifest.value("seed", std::uint64_t{0});
    set.dataset_id = c.manifest.value("dataset", std::string{});
    if (c.manifest.at("count").get<std::size_t>() != c.tensors.size()) {
      throw FormatError(FormatErrorKind::kConsistency, where + "count disagrees with blobs");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrorKind::kMalformed, where + "manifest: " + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(FormatErrorKind::kMalformed, where + e.what());
  }
  set.vectors = std::move(c.tensors);
  try {
    set.validate();
  } catch (const Error& e) {
    throw FormatError(FormatErrorKind::kConsistency, where + e.what());
  }
  return set;
}

double boundary_distance(const Tensor& u, const Tensor& b, const Tensor& x, std::size_t i) {
  const Tensor logits = affine_forward(flat(x), u, b);
  const std::size_t l = argmax(logits.data());
  if (i >= logits.size()) throw ArgumentError("class index outside [0, k)");
  if (i == l) throw ArgumentError("boundary_distance needs i != predicted class");
  const double denom = l1_row_difference(u, i, l);
  if (denom == 0.0) {
    throw DegenerateBoundaryError("rows " + std::to_string(i) + " and " + std::to_string(l) +
                                  " coincide");
  }
  return std::fabs(static_cast<double>(logits[i]) - static_cast<double>(logits[l])) / denom;
}

std::size_t nearest_boundary_class(const Tensor& rows, std::span<const float> logits,
                                   std::size_t predicted) {
  const std::size_t k = rows.dim(0);
  std::size_t best = k;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    if (i == predicted) continue;
    const double denom = l1_row_difference(rows, i, predicted);
    if (denom == 0.0) continue;
    const double dist =
        std::fabs(static_cast<double>(logits[i]) - static_cast<double>(logits[predicted])) /
        denom;
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  if (best == k) throw DegenerateBoundaryError("every class row equals the predicted row");
  return best;
}

Tensor sign_step(std::span<const double> direction, double epsilon) {
  Tensor out({direction.size()});
  const float e = static_cast<float>(epsilon);
  for (std::size_t j = 0; j < direction.size(); ++j) {
    out[j] = direction[j] > 0.0 ? e : (direction[j] < 0.0 ? 0.0f - e : 0.0f);  // never -0
  }
  return out;
}

namespace {

enum class TargetRule { kNearest, kMeanOfOthers };

// Sign step for one sample from its Jacobian rows [k, d] and logits [k].
Tensor linearized_step(const Tensor& rows, std::span<const float> logits, double epsilon,
                       TargetRule rule) {
  const std::size_t k = rows.dim(0);
  const std::size_t d = rows.dim(1);
  const std::size_t l = argmax(logits);
  const std::size_t t = nearest_boundary_class(rows, logits, l);
  std::vector<double> dir(d, 0.0);
  if (rule == TargetRule::kNearest) {
    for (std::size_t j = 0; j < d; ++j) {
      dir[j] = static_cast<double>(rows[t * d + j]) - static_cast<double>(rows[l * d + j]);
    }
  } else {
    // (k - 1) times mean-of-others minus own: same sign, and ties stay exact.
    const double others = static_cast<double>(k - 1);
    for (std::size_t i = 0; i < k; ++i) {
      if (i == l) continue;
      for (std::size_t j = 0; j < d; ++j) dir[j] += static_cast<double>(rows[i * d + j]);
    }
    for (std::size_t j = 0; j < d; ++j) dir[j] -= others * static_cast<double>(rows[l * d + j]);
  }
  return sign_step(dir, epsilon);
}

Tensor linearized_attack(const Model& model, const Tensor& x, double epsilon, TargetRule rule) {
  require_epsilon(epsilon);
  const Tensor rows = input_jacobian(model, x);
  const Tensor logits = model.forward(x);
  return linearized_step(rows, logits.data(), epsilon, rule).reshaped(x.shape());
}

}  // namespace

Tensor baseline_attack(const Model& model, const Tensor& x, double epsilon) {
  return linearized_attack(model, x, epsilon, TargetRule::kNearest);
}

Tensor a1_attack(const Model& model, const Tensor& x, double epsilon) {
  return linearized_attack(model, x, epsilon, TargetRule::kMeanOfOthers);
}

PerturbationSet universal_attack(const AffineMap& map, double epsilon) {
  require_epsilon(epsilon);
  const std::size_t k = map.num_classes();
  const std::size_t d = map.input_dim();
  if (k < 2 || map.b.shape() != Shape{k}) throw DimensionError("invalid affine map");
  if (!all_finite(map.u)) throw NumericError("affine map holds non-finite entries");

  std::vector<double> total(d, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < d; ++j) total[j] += map.u[i * d + j];
  }
  PerturbationSet set;
  set.layout = PerturbationLayout::kPerClass;
  set.source = PerturbationSource::kUniversal;
  set.epsilon = epsilon;
  set.num_classes = k;
  set.dim = d;
  set.source_model_id = map.source_model_id;
  // Scaled by k - 1, which leaves every sign (and every exact tie) intact.
  const double kd = static_cast<double>(k);
  std::vector<double> dir(d);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) dir[j] = total[j] - kd * map.u[c * d + j];
    set.vectors.push_back(sign_step(dir, epsilon));
  }
  return set;
}

Tensor fgsm(const Model& model, const Tensor& x, std::size_t label, double epsilon,
            std::optional<std::size_t> target) {
  require_epsilon(epsilon);
  if (label >= model.num_classes()) throw ArgumentError("label outside [0, k)");
  double sign = 1.0;
  std::size_t toward = label;
  if (target) {
    if (*target == label) throw ArgumentError("targeted FGSM needs target != label");
    sign = -1.0;
    toward = *target;
  }
  const Tensor g = input_gradient(model, x, CrossEntropySelector{toward});
  std::vector<double> dir(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) dir[j] = sign * g[j];
  return sign_step(dir, epsilon).reshaped(x.shape());
}

Tensor random_sign(std::size_t d, double epsilon, std::uint64_t seed) {
  require_epsilon(epsilon);
  Rng rng = Rng::stream(seed, 0x7a9d);
  Tensor out({d});
  const float e = static_cast<float>(epsilon);
  for (float& v : out.mutable_data()) v = rng.coin() ? e : 0.0f - e;
  return out;
}

Tensor apply(const Tensor& x, const Tensor& dx, std::optional<ClipRange> clip) {
  if (x.size() != dx.size()) {
    throw DimensionError("perturbation " + shape_string(dx.shape()) + " vs input " +
                         shape_string(x.shape()));
  }
  Tensor out(x.shape());
  for (std::size_t j = 0; j < x.size(); ++j) {
    float v = x[j] + dx[j];
    if (clip) v = std::clamp(v, clip->lo, clip->hi);
    out[j] = v;
  }
  return out;
}

Tensor fgsm_batch(const Model& model, const Tensor& batch, std::span<const std::size_t> labels,
                  double epsilon, std::span<const std::size_t> targets) {
  require_epsilon(epsilon);
  const bool targeted = !targets.empty();
  if (targeted && targets.size() != labels.size()) {
    throw DimensionError("targets and labels differ in length");
  }
  Tensor g = cross_entropy_input_gradients(model, batch, targeted ? targets : labels);
  const float e = static_cast<float>(epsilon);
  for (float& v : g.mutable_data()) {
    const float s = v > 0.0f ? e : (v < 0.0f ? 0.0f - e : 0.0f);
    v = targeted ? 0.0f - s : s;
  }
  return g;
}

Tensor pgd_batch(const Model& model, const Tensor& batch, std::span<const std::size_t> labels,
                 const PgdConfig& config, Rng& rng, ClipRange clip) {
  require_epsilon(config.epsilon);
  const float eps = static_cast<float>(config.epsilon);
  const float step = static_cast<float>(config.step_size);
  Tensor adv = batch;
  if (config.random_start) {
    for (std::size_t j = 0; j < adv.size(); ++j) {
      const float r = static_cast<float>(rng.uniform(-config.epsilon, config.epsilon));
      adv[j] = std::clamp(batch[j] + r, clip.lo, clip.hi);
    }
  }
  for (int s = 0; s < config.steps; ++s) {
    const Tensor g = cross_entropy_input_gradients(model, adv, labels);
    for (std::size_t j = 0; j < adv.size(); ++j) {
      const float dir = g[j] > 0.0f ? step : (g[j] < 0.0f ? -step : 0.0f);
      const float v = std::clamp(adv[j] + dir, batch[j] - eps, batch[j] + eps);
      adv[j] = std::clamp(v, clip.lo, clip.hi);
    }
  }
  return adv;
}

PerturbationSet per_example_attack(const Model& model, const Dataset& data,
                                   PerturbationSource source, double epsilon,
                                   std::size_t threads) {
  require_epsilon(epsilon);
  if (data.sample_dim() != model.input_dim()) {
    throw DimensionError("dataset images do not match the model input");
  }
  PerturbationSet set;
  set.layout = PerturbationLayout::kPerExample;
  set.source = source;
  set.epsilon = epsilon;
  set.num_classes = model.num_classes();
  set.dim = model.input_dim();
  set.dataset_id = data.fingerprint();
  set.vectors.resize(data.size());
  const std::size_t d = set.dim;
  switch (source) {
    case PerturbationSource::kBaseline:
    case PerturbationSource::kA1:
    {
      const TargetRule rule =
          source == PerturbationSource::kBaseline ? TargetRule::kNearest : TargetRule::kMeanOfOthers;
      const std::size_t k = model.num_classes();
      const std::size_t chunks = (data.size() + kJacobianBatch - 1) / kJacobianBatch;
      parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t begin = c * kJacobianBatch;
        const std::size_t count = std::min(kJacobianBatch, data.size() - begin);
        const Tensor batch = data.batch(begin, count);
        const Tensor jac = input_jacobians(model, batch);
        const Tensor logits = model.forward(batch);
        for (std::size_t i = 0; i < count; ++i) {
          const Tensor rows = jac.row(i);
          set.vectors[begin + i] =
              linearized_step(rows.reshaped({k, d}), logits.data().subspan(i * k, k), epsilon,
                              rule);
        }
      });
      break;
    }
    case PerturbationSource::kFgsm: {
      const std::size_t chunks = (data.size() + kGradientBatch - 1) / kGradientBatch;
      parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t begin = c * kGradientBatch;
        const std::size_t count = std::min(kGradientBatch, data.size() - begin);
        const Tensor dx = fgsm_batch(model, data.batch(begin, count),
                                     data.labels().subspan(begin, count), epsilon);
        for (std::size_t i = 0; i < count; ++i) {
          set.vectors[begin + i] = dx.row(i).reshaped({d});
        }
      });
      break;
    }
    default:
      throw ArgumentError(std::string("'") + to_string(source) +
                          "' is not a per-example attack");
  }
  return set;
}

PerturbationSet random_perturbation(std::size_t d, std::size_t num_classes, double epsilon,
                                    std::uint64_t seed) {
  PerturbationSet set;
  set.layout = PerturbationLayout::kShared;
  set.source = PerturbationSource::kRandomSign;
  set.epsilon = epsilon;
  set.num_classes = num_classes;
  set.dim = d;
  set.seed = seed;
  set.vectors.push_back(random_sign(d, epsilon, seed));
  return set;
}

}  // namespace uap

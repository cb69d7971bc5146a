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

// Max-norm perturbation constructions.
//
//   baseline   per example: sign step toward the nearest boundary of the
//              classifier linearized at x (distance |f_i - f_l| / |w_i - w_l|_1)
//   a1         per example: as baseline, but toward the mean of the other
//              classes' rows instead of the nearest one
//   universal  per class, data free: sign(mean_{i != j} u_i - u_j) from the
//              linear companion's U
//   fgsm       per example: sign of the cross-entropy input gradient
//   random     shared: independent +-eps coordinates
//
// sign(0) is 0 throughout, so every emitted coordinate lies in {-eps, 0, +eps}.

#ifndef UAP_ATTACKS_HPP_
#define UAP_ATTACKS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uap/dataset.hpp"
#include "uap/linearizer.hpp"
#include "uap/model.hpp"

namespace uap {

class Rng;

enum class PerturbationSource { kUniversal, kA1, kBaseline, kFgsm, kRandomSign };
enum class PerturbationLayout { kPerClass, kPerExample, kShared };

const char* to_string(PerturbationSource source);
const char* to_string(PerturbationLayout layout);
PerturbationSource parse_perturbation_source(std::string_view name);

struct ClipRange {
  float lo = 0.0f;
  float hi = 1.0f;
};

/// A family of max-norm perturbations and where they came from.
///
/// kPerClass holds k vectors selected by the ground-truth class; kPerExample
/// holds one vector per dataset image (in dataset order); kShared holds one
/// vector applied to every image.
struct PerturbationSet {
  PerturbationLayout layout = PerturbationLayout::kPerClass;
  PerturbationSource source = PerturbationSource::kUniversal;
  double epsilon = 0.0;
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<Tensor> vectors;  // each [dim]
  std::string source_model_id;
  std::uint64_t seed = 0;
  std::string dataset_id;  // per-example sets only

  const Tensor& for_example(std::size_t index, std::size_t label) const;
  /// Checks vector shapes and the max-norm budget; throws on violation.
  void validate() const;
};

/// Container with magic "UAPP": manifest (k, d, eps, source, layout, model
/// hash, seed, count) then the perturbation blobs.
void save_perturbations(const PerturbationSet& set, const std::filesystem::path& path);
PerturbationSet load_perturbations(const std::filesystem::path& path);

/// |f_i(x) - f_l(x)| / |u_i - u_l|_1 with l the predicted class of U x + b.
double boundary_distance(const Tensor& u, const Tensor& b, const Tensor& x, std::size_t i);

/// Closest class (by boundary_distance) other than `predicted`, given rows
/// [k, d] and logits [k]. Throws DegenerateBoundaryError when every row
/// coincides with the predicted one.
std::size_t nearest_boundary_class(const Tensor& rows, std::span<const float> logits,
                                   std::size_t predicted);

Tensor baseline_attack(const Model& model, const Tensor& x, double epsilon);
Tensor a1_attack(const Model& model, const Tensor& x, double epsilon);

/// eps * sign(v) coordinatewise with sign(0) = 0.
Tensor sign_step(std::span<const double> direction, double epsilon);

PerturbationSet universal_attack(const AffineMap& map, double epsilon);

/// Untargeted: eps * sign(grad CE(label)); targeted: -eps * sign(grad CE(target)).
Tensor fgsm(const Model& model, const Tensor& x, std::size_t label, double epsilon,
            std::optional<std::size_t> target = std::nullopt);

Tensor random_sign(std::size_t d, double epsilon, std::uint64_t seed);

/// clamp(x + dx) into the clip range; no clamping when `clip` is empty.
Tensor apply(const Tensor& x, const Tensor& dx,
             std::optional<ClipRange> clip = ClipRange{});

/// Batched FGSM perturbations (unclipped deltas) with the batch's shape.
/// `targets`, when given, selects the targeted variant per example.
Tensor fgsm_batch(const Model& model, const Tensor& batch, std::span<const std::size_t> labels,
                  double epsilon, std::span<const std::size_t> targets = {});

struct PgdConfig {
  double epsilon = 0.3;
  int steps = 40;
  double step_size = 0.03;
  bool random_start = true;
};

/// Projected gradient ascent on the cross-entropy within the eps ball and
/// the clip range. Returns the adversarial batch.
Tensor pgd_batch(const Model& model, const Tensor& batch, std::span<const std::size_t> labels,
                 const PgdConfig& config, Rng& rng, ClipRange clip = ClipRange{});

/// Runs a per-example attack (baseline, a1 or fgsm) over every image.
PerturbationSet per_example_attack(const Model& model, const Dataset& data,
                                   PerturbationSource source, double epsilon,
                                   std::size_t threads = 1);

/// One shared random-sign vector.
PerturbationSet random_perturbation(std::size_t d, std::size_t num_classes, double epsilon,
                                    std::uint64_t seed);

}  // namespace uap

#endif  // UAP_ATTACKS_HPP_

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

// Evaluation and diagnostics: fooling rates, transfer tables, the spectrum of
// example-specific perturbations, and planarity of sampled class boundaries.

#ifndef UAP_ANALYSIS_HPP_
#define UAP_ANALYSIS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uap/attacks.hpp"
#include "uap/dataset.hpp"
#include "uap/linalg.hpp"
#include "uap/model.hpp"

namespace uap {

struct EvalReport {
  std::size_t num_classes = 0;
  std::size_t n_examples = 0;
  double epsilon = 0.0;
  PerturbationSource source = PerturbationSource::kUniversal;
  bool clipped = true;
  double clean_accuracy = 0.0;
  /// Label changes over every evaluated image.
  double overall_fooling_rate = 0.0;
  /// Label changes among images the model classified correctly.
  double correct_only_fooling_rate = 0.0;
  std::vector<std::size_t> class_counts;  // by ground-truth class
  std::vector<double> per_class_fooling;  // by ground-truth class
  /// [true class][label after perturbation].
  std::vector<std::vector<std::size_t>> induced_label_histogram;
};

struct EvalOptions {
  bool clip = true;
  std::size_t threads = 1;
};

/// Per-class sets pick the vector by ground-truth label; per-example sets
/// must match `data` image for image.
EvalReport fooling_rate(const Model& model, const Dataset& data, const PerturbationSet& set,
                        const EvalOptions& options = {});

/// entry[r][c]: fooling rate of models[c] under the universal perturbations
/// extracted from models[r].
std::vector<std::vector<double>> transfer_matrix(const std::vector<const Model*>& models,
                                                 const Dataset& data, double epsilon,
                                                 const EvalOptions& options = {});

struct SpectrumConfig {
  double epsilon = 0.3;
  std::size_t rank = 5;
  std::uint64_t seed = 0;
  /// Cap on the perturbation columns taken from the first half (0: all).
  std::size_t max_columns = 0;
  EvalOptions eval;
};

struct SpectrumReport {
  std::size_t fit_examples = 0;
  std::size_t test_examples = 0;
  std::size_t rank = 0;
  double epsilon = 0.0;
  std::vector<double> singular_values;
  std::vector<double> singular_value_ratios;  // sigma_i / sigma_1
  /// [class][component]: cosine of each class's universal perturbation with
  /// the top input-space singular vectors.
  std::vector<std::vector<double>> cosine_similarities;
  double subspace_fooling_rate = 0.0;
  double random_fooling_rate = 0.0;
};

/// FGSM perturbations on the first half of `data` form the columns of P; sign
/// vectors from random combinations of P's top `rank` left singular vectors
/// are scored on the second half, next to a random-sign control.
SpectrumReport perturbation_svd(const Model& model, const Dataset& data,
                                const SpectrumConfig& config);

struct BoundaryConfig {
  double epsilon = 0.3;
  double tau = 1e-4;
  int max_bisection_steps = 60;
  /// Cap on boundary samples per class pair (0: unlimited).
  std::size_t max_samples_per_pair = 0;
  std::size_t threads = 1;
};

struct PairFit {
  std::size_t from = 0;  // clean class i
  std::size_t to = 0;    // adversarial class j
  std::size_t samples = 0;
  std::size_t predictors = 0;     // varying non-response coordinates
  std::size_t response_index = 0; // highest-variance coordinate
  bool sufficient = false;
  std::size_t held_out = 0;       // samples with a defined leave-one-out residual
  std::optional<double> predicted_r2;
};

struct BoundaryReport {
  double epsilon = 0.0;
  double tau = 0.0;
  std::string fit_target = "highest_variance_coordinate";
  std::vector<PairFit> pairs;  // k (k - 1) entries, i != j
  std::size_t valid_pairs = 0;
  std::size_t planar_pairs = 0;  // predicted R^2 >= 0.9 among valid pairs
};

/// Leave-one-out planarity of a point cloud (rows are samples): regress the
/// highest-variance coordinate on every other varying coordinate.
PairFit fit_boundary_samples(const Matrix& samples);

/// Bisects segments from correctly classified class-i images toward targeted
/// FGSM counterparts classified j, stopping once
/// |f_i - f_j| <= tau (|f_i| + |f_j| + 1), and fits each pair's samples.
BoundaryReport boundary_linearity(const Model& model, const Dataset& data,
                                  const BoundaryConfig& config);

struct ClassHistogram {
  std::vector<double> edges;         // bins + 1 edges over [0, 1]
  std::vector<std::size_t> counts;   // classes per bin; rate 1 in the last bin
};

ClassHistogram per_class_histogram(const EvalReport& report, int bins);

/// mean_c |a.per_class_fooling[c] - b.per_class_fooling[c]|.
double mean_abs_per_class_difference(const EvalReport& a, const EvalReport& b);

nlohmann::ordered_json to_json(const EvalReport& report);
nlohmann::ordered_json to_json(const SpectrumReport& report);
nlohmann::ordered_json to_json(const BoundaryReport& report);
nlohmann::ordered_json to_json(const ClassHistogram& histogram);

/// "class,count,fooling_rate" rows.
std::string per_class_csv(const EvalReport& report);
/// "index,singular_value,ratio" rows.
std::string spectrum_csv(const SpectrumReport& report);
/// "from,to,samples,predictors,sufficient,predicted_r2" rows.
std::string boundary_csv(const BoundaryReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace uap

#endif  // UAP_ANALYSIS_HPP_

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

// Scripted MNIST pipelines: victim models (trained once, then cached by
// recipe) and the attack, spectrum and boundary studies run on them.

#ifndef UAP_EXPERIMENTS_HPP_
#define UAP_EXPERIMENTS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "uap/dataset.hpp"
#include "uap/model.hpp"
#include "uap/trainer.hpp"

namespace uap {

struct ExperimentConfig {
  std::filesystem::path data_dir;
  std::uint64_t seed = 0;
  int epochs = 3;
  int robust_epochs = 3;
  double learning_rate = 0.1;
  std::size_t batch_size = 64;
  AdversarialConfig robust{AdversarialMethod::kPgd, 0.3, 3, 0.1, true};
  std::size_t train_limit = 0;  // 0: whole split
  std::size_t test_limit = 0;
  /// Trained models are stored here and reused; empty disables caching.
  std::filesystem::path cache_dir;
  double epsilon = 0.3;
  std::size_t threads = 1;
  /// Boundary study: images drawn from the training split (after
  /// train_limit) to source boundary samples, and the per-pair cap.
  std::size_t boundary_images = 0;
  std::size_t boundary_max_samples = 0;
  /// Spectrum study: cap on perturbation columns (0: half the test set).
  std::size_t spectrum_columns = 0;
  /// Progress lines (training epochs, cache hits); may be empty.
  std::function<void(const std::string&)> log;
};

enum class VictimKind { kStandardCnn, kRobustCnn, kMlp };

const char* to_string(VictimKind kind);

Dataset experiment_train_set(const ExperimentConfig& config);
Dataset experiment_test_set(const ExperimentConfig& config);

/// Trains (or loads from the cache) the requested MNIST victim. The cache key
/// covers every field that influences the parameters.
Model victim_model(VictimKind kind, const ExperimentConfig& config);

/// Success rates of the baseline, a1 and universal constructions plus a
/// random-sign control on the standard CNN.
nlohmann::ordered_json reproduce_table2(const ExperimentConfig& config);

/// Spectrum study on the standard and robust CNNs.
nlohmann::ordered_json reproduce_spectrum(const ExperimentConfig& config);

/// Boundary planarity on the standard and robust CNNs.
nlohmann::ordered_json reproduce_boundary(const ExperimentConfig& config);

}  // namespace uap

#endif  // UAP_EXPERIMENTS_HPP_

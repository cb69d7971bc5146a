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

// Mini-batch SGD (no momentum) on mean softmax cross-entropy, optionally on
// FGSM or PGD examples generated against the current parameters.

#ifndef UAP_TRAINER_HPP_
#define UAP_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "uap/dataset.hpp"
#include "uap/model.hpp"

namespace uap {

enum class AdversarialMethod { kFgsm, kPgd };

const char* to_string(AdversarialMethod method);
AdversarialMethod parse_adversarial_method(std::string_view name);

struct AdversarialConfig {
  AdversarialMethod method = AdversarialMethod::kPgd;
  double epsilon = 0.3;
  int pgd_steps = 40;
  double pgd_step_size = 0.03;
  bool random_start = true;
};

struct TrainConfig {
  int epochs = 3;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  /// Weight decay on weights (not biases), added to the gradient as l2 * w.
  double l2_coefficient = 0.0;
  std::uint64_t seed = 0;
  std::optional<AdversarialConfig> adversarial;

  /// Throws ArgumentError on a bad field.
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  /// Running accuracy on the (possibly attacked) training batches.
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
  double seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
};

/// Fraction of `data` classified correctly, evaluated in batches.
double accuracy(const Model& model, const Dataset& data, std::size_t batch = 256);

/// Initializes from `arch` and trains. Initialization, shuffling, dropout and
/// attack randomness come from separate streams derived from config.seed, so
/// results are bit-identical for a fixed seed. `test`, when given, is scored
/// after every epoch. Throws TrainingError on a non-finite loss.
TrainResult train(const Architecture& arch, const Dataset& train_data, const Dataset* test,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// train() with every batch replaced by attacked examples. Requires
/// config.adversarial. At epsilon 0 the parameters equal those of train().
TrainResult adversarial_train(const Architecture& arch, const Dataset& train_data,
                              const Dataset* test, const TrainConfig& config,
                              const EpochCallback& on_epoch = {});

/// {"config": ..., "epochs": [{epoch, mean_loss, train_accuracy, ...}]}.
void write_training_log(const TrainConfig& config, const std::vector<EpochLog>& log,
                        const std::filesystem::path& path);

}  // namespace uap

#endif  // UAP_TRAINER_HPP_

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

#include "uap/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "uap/attacks.hpp"
#include "uap/error.hpp"
#include "uap/rng.hpp"

namespace uap {

namespace {

// Stream ids under config.seed.
constexpr std::uint64_t kInitStream = 10;
constexpr std::uint64_t kShuffleStream = 11;
constexpr std::uint64_t kDropoutStream = 12;
constexpr std::uint64_t kAttackStream = 13;

void sgd_step(std::vector<LayerParams>& params, const std::vector<LayerParams>& grads,
              double lr, double l2) {
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto w = params[p].weight.mutable_data();
    const auto gw = grads[p].weight.data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double g = static_cast<double>(gw[j]) + l2 * static_cast<double>(w[j]);
      w[j] = static_cast<float>(static_cast<double>(w[j]) - lr * g);
    }
    auto b = params[p].bias.mutable_data();
    const auto gb = grads[p].bias.data();
    for (std::size_t j = 0; j < b.size(); ++j) {
      b[j] = static_cast<float>(static_cast<double>(b[j]) - lr * static_cast<double>(gb[j]));
    }
  }
}

Tensor attack_batch(const Model& model, const Tensor& batch,
                    std::span<const std::size_t> labels, const AdversarialConfig& adv,
                    Rng& rng) {
  if (adv.method == AdversarialMethod::kFgsm) {
    return apply(batch, fgsm_batch(model, batch, labels, adv.epsilon));
  }
  PgdConfig pgd{adv.epsilon, adv.pgd_steps, adv.pgd_step_size, adv.random_start};
  return pgd_batch(model, batch, labels, pgd, rng);
}

TrainResult run(const Architecture& arch, const Dataset& train_data, const Dataset* test,
                const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_data.sample_shape() != arch.input_shape) {
    throw DimensionError("training images " + shape_string(train_data.sample_shape()) +
                         " vs architecture input " + shape_string(arch.input_shape));
  }
  if (train_data.num_classes() != arch.num_classes) {
    throw DimensionError("dataset and architecture disagree on the class count");
  }
  if (train_data.size() == 0) throw ArgumentError("empty training set");

  Rng init_rng = Rng::stream(config.seed, kInitStream);
  Rng shuffle_rng = Rng::stream(config.seed, kShuffleStream);
  Rng dropout_rng = Rng::stream(config.seed, kDropoutStream);
  Rng attack_rng = Rng::stream(config.seed, kAttackStream);

  Model model = Model::initialize(arch, init_rng);
  std::vector<LayerParams> params = model.params();
  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{model, {}};
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<std::size_t> labels;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - begin);
      const std::span<const std::size_t> idx(order.data() + begin, count);
      Tensor batch = train_data.gather(idx);
      labels.resize(count);
      for (std::size_t i = 0; i < count; ++i) labels[i] = train_data.label(idx[i]);
      if (config.adversarial) {
        batch = attack_batch(model, batch, labels, *config.adversarial, attack_rng);
      }
      const ForwardTrace tr = model.trace(batch, Mode::kTraining, &dropout_rng);
      const CrossEntropy ce = softmax_cross_entropy(tr.logits, labels);
      if (!std::isfinite(ce.loss)) throw TrainingError(epoch, "non-finite loss");
      loss_sum += ce.loss * static_cast<double>(count);
      correct += ce.correct;
      const ModelGradients g = model.backward(tr, ce.grad_logits, true);
      sgd_step(params, g.params, config.learning_rate, config.l2_coefficient);
      model = model.with_params(params);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_loss = loss_sum / static_cast<double>(order.size());
    entry.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (!std::isfinite(entry.mean_loss)) throw TrainingError(epoch, "non-finite loss");
    if (test != nullptr) entry.test_accuracy = accuracy(model, *test);
    entry.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }

  ModelMetadata md;
  md.name = arch.name;
  md.seed = config.seed;
  md.epochs = config.epochs;
  md.train_accuracy = result.log.back().train_accuracy;
  md.test_accuracy = result.log.back().test_accuracy;
  if (config.adversarial) {
    md.origin = std::string("adversarial:") + to_string(config.adversarial->method);
  }
  result.model = model.with_metadata(std::move(md));
  return result;
}

}  // namespace

const char* to_string(AdversarialMethod method) {
  return method == AdversarialMethod::kFgsm ? "fgsm" : "pgd";
}

AdversarialMethod parse_adversarial_method(std::string_view name) {
  if (name == "fgsm") return AdversarialMethod::kFgsm;
  if (name == "pgd") return AdversarialMethod::kPgd;
  throw ArgumentError("unknown adversarial method '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ArgumentError("learning rate must be positive");
  }
  if (!(l2_coefficient >= 0.0)) throw ArgumentError("l2 coefficient must be >= 0");
  if (adversarial) {
    if (!(adversarial->epsilon >= 0.0)) throw ArgumentError("epsilon must be >= 0");
    if (adversarial->method == AdversarialMethod::kPgd &&
        (adversarial->pgd_steps < 1 || !(adversarial->pgd_step_size >= 0.0))) {
      throw ArgumentError("PGD needs steps >= 1 and a step size >= 0");
    }
  }
}

double accuracy(const Model& model, const Dataset& data, std::size_t batch) {
  if (data.size() == 0) throw ArgumentError("accuracy of an empty dataset");
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < data.size(); begin += batch) {
    const std::size_t count = std::min(batch, data.size() - begin);
    const std::vector<std::size_t> pred = model.predict_batch(data.batch(begin, count));
    for (std::size_t i = 0; i < count; ++i) correct += pred[i] == data.label(begin + i);
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const Architecture& arch, const Dataset& train_data, const Dataset* test,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  TrainConfig plain = config;
  plain.adversarial.reset();
  return run(arch, train_data, test, plain, on_epoch);
}

TrainResult adversarial_train(const Architecture& arch, const Dataset& train_data,
                              const Dataset* test, const TrainConfig& config,
                              const EpochCallback& on_epoch) {
  if (!config.adversarial) throw ArgumentError("adversarial_train needs an adversarial config");
  return run(arch, train_data, test, config, on_epoch);
}

void write_training_log(const TrainConfig& config, const std::vector<EpochLog>& log,
                        const std::filesystem::path& path) {
  nlohmann::ordered_json cfg{{"epochs", config.epochs},
                             {"batch_size", config.batch_size},
                             {"learning_rate", config.learning_rate},
                             {"l2_coefficient", config.l2_coefficient},
                             {"seed", config.seed}};
  if (config.adversarial) {
    const AdversarialConfig& a = *config.adversarial;
    cfg["adversarial"] = {{"method", to_string(a.method)},
                          {"epsilon", a.epsilon},
                          {"pgd_steps", a.pgd_steps},
                          {"pgd_step_size", a.pgd_step_size},
                          {"random_start", a.random_start}};
  }
  nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
  for (const EpochLog& e : log) {
    nlohmann::ordered_json row{{"epoch", e.epoch},
                               {"mean_loss", e.mean_loss},
                               {"train_accuracy", e.train_accuracy}};
    if (e.test_accuracy) row["test_accuracy"] = *e.test_accuracy;
    epochs.push_back(row);
  }
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << nlohmann::ordered_json{{"config", cfg}, {"epochs", epochs}}.dump(2) << '\n';
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace uap

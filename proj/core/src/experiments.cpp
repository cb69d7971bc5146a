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

#include "uap/experiments.hpp"

#include <system_error>

#include "container.hpp"
#include "uap/analysis.hpp"
#include "uap/architectures.hpp"
#include "uap/attacks.hpp"
#include "uap/error.hpp"
#include "uap/linearizer.hpp"
#include "uap/model_io.hpp"

namespace uap {

namespace {

void say(const ExperimentConfig& c, const std::string& line) {
  if (c.log) c.log(line);
}

Dataset limited(Dataset d, std::size_t limit) {
  if (limit == 0 || limit >= d.size()) return d;
  return d.slice(0, limit);
}

nlohmann::ordered_json recipe(VictimKind kind, const ExperimentConfig& c) {
  nlohmann::ordered_json r{{"kind", to_string(kind)},
                           {"seed", c.seed},
                           {"learning_rate", c.learning_rate},
                           {"batch_size", c.batch_size},
                           {"train_limit", c.train_limit}};
  if (kind == VictimKind::kRobustCnn) {
    r["epochs"] = c.robust_epochs;
    r["method"] = to_string(c.robust.method);
    r["epsilon"] = c.robust.epsilon;
    r["pgd_steps"] = c.robust.pgd_steps;
    r["pgd_step_size"] = c.robust.pgd_step_size;
    r["random_start"] = c.robust.random_start;
  } else {
    r["epochs"] = c.epochs;
  }
  return r;
}

EvalOptions eval_options(const ExperimentConfig& c) {
  EvalOptions o;
  o.threads = c.threads;
  return o;
}

nlohmann::ordered_json model_summary(const Model& m, const Dataset& test) {
  return {{"id", model_id(m)},
          {"name", m.metadata().name},
          {"origin", m.metadata().origin},
          {"test_accuracy", accuracy(m, test)}};
}

}  // namespace

const char* to_string(VictimKind kind) {
  switch (kind) {
    case VictimKind::kStandardCnn:
      return "standard-cnn";
    case VictimKind::kRobustCnn:
      return "robust-cnn";
    case VictimKind::kMlp:
      return "mlp";
  }
  return "unknown";
}

Dataset experiment_train_set(const ExperimentConfig& config) {
  return limited(load_dataset(config.data_dir, Split::kTrain), config.train_limit);
}

Dataset experiment_test_set(const ExperimentConfig& config) {
  return limited(load_dataset(config.data_dir, Split::kTest), config.test_limit);
}

Model victim_model(VictimKind kind, const ExperimentConfig& config) {
  const nlohmann::ordered_json key = recipe(kind, config);
  detail::Fnv1a h;
  h.update(key.dump());
  std::filesystem::path cached;
  if (!config.cache_dir.empty()) {
    cached = config.cache_dir / (std::string(to_string(kind)) + "-" + h.hex() + ".uapm");
    if (std::filesystem::exists(cached)) {
      say(config, "using cached " + cached.string());
      return load_model(cached);
    }
  }

  const Dataset train_set = experiment_train_set(config);
  const Dataset test_set = experiment_test_set(config);
  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.learning_rate = config.learning_rate;
  tc.seed = config.seed;
  Architecture arch;
  switch (kind) {
    case VictimKind::kStandardCnn:
    case VictimKind::kRobustCnn:
      arch = mnist_cnn(train_set.sample_shape(), train_set.num_classes());
      break;
    case VictimKind::kMlp:
      arch = mlp(train_set.sample_shape(), train_set.num_classes());
      break;
  }
  const std::string label = to_string(kind);
  EpochCallback progress = [&](const EpochLog& e) {
    say(config, label + " epoch " + std::to_string(e.epoch) + " loss " +
                    std::to_string(e.mean_loss) + " test " +
                    std::to_string(e.test_accuracy.value_or(0.0)));
  };
  if (kind == VictimKind::kRobustCnn) {
    tc.epochs = config.robust_epochs;
    tc.adversarial = config.robust;
  }
  const TrainResult result = tc.adversarial
                                 ? adversarial_train(arch, train_set, &test_set, tc, progress)
                                 : train(arch, train_set, &test_set, tc, progress);
  if (!cached.empty()) {
    std::filesystem::create_directories(config.cache_dir);
    const std::filesystem::path tmp = cached.string() + ".tmp";
    save_model(result.model, tmp);
    std::filesystem::rename(tmp, cached);
    say(config, "cached " + cached.string());
  }
  return result.model;
}

nlohmann::ordered_json reproduce_table2(const ExperimentConfig& config) {
  const Dataset test = experiment_test_set(config);
  const Model model = victim_model(VictimKind::kStandardCnn, config);
  const EvalOptions opts = eval_options(config);
  const double eps = config.epsilon;

  const EvalReport baseline = fooling_rate(
      model, test, per_example_attack(model, test, PerturbationSource::kBaseline, eps,
                                      config.threads),
      opts);
  const EvalReport a1 = fooling_rate(
      model, test,
      per_example_attack(model, test, PerturbationSource::kA1, eps, config.threads), opts);
  const EvalReport universal =
      fooling_rate(model, test, universal_attack(extract_u(linearize(model)), eps), opts);
  const EvalReport random = fooling_rate(
      model, test, random_perturbation(model.input_dim(), model.num_classes(), eps, config.seed),
      opts);

  return {{"experiment", "table2"},
          {"seed", config.seed},
          {"epsilon", eps},
          {"model", model_summary(model, test)},
          {"success_rate",
           {{"baseline", baseline.overall_fooling_rate},
            {"a1", a1.overall_fooling_rate},
            {"universal", universal.overall_fooling_rate},
            {"random", random.overall_fooling_rate}}},
          {"baseline", to_json(baseline)},
          {"a1", to_json(a1)},
          {"universal", to_json(universal)},
          {"random", to_json(random)}};
}

nlohmann::ordered_json reproduce_spectrum(const ExperimentConfig& config) {
  const Dataset test = experiment_test_set(config);
  SpectrumConfig sc;
  sc.epsilon = config.epsilon;
  sc.seed = config.seed;
  sc.max_columns = config.spectrum_columns;
  sc.eval = eval_options(config);
  nlohmann::ordered_json out{{"experiment", "spectrum"},
                             {"seed", config.seed},
                             {"epsilon", config.epsilon}};
  for (VictimKind kind : {VictimKind::kStandardCnn, VictimKind::kRobustCnn}) {
    const Model model = victim_model(kind, config);
    nlohmann::ordered_json entry{{"model", model_summary(model, test)}};
    entry["spectrum"] = to_json(perturbation_svd(model, test, sc));
    out[to_string(kind)] = entry;
  }
  return out;
}

nlohmann::ordered_json reproduce_boundary(const ExperimentConfig& config) {
  Dataset source = config.boundary_images > 0
                       ? limited(load_dataset(config.data_dir, Split::kTrain),
                                 config.boundary_images)
                       : experiment_test_set(config);
  BoundaryConfig bc;
  bc.epsilon = config.epsilon;
  bc.max_samples_per_pair = config.boundary_max_samples;
  bc.threads = config.threads;
  nlohmann::ordered_json out{{"experiment", "boundary"},
                             {"seed", config.seed},
                             {"epsilon", config.epsilon},
                             {"source_images", source.size()},
                             {"source_split", config.boundary_images > 0 ? "train" : "test"}};
  for (VictimKind kind : {VictimKind::kStandardCnn, VictimKind::kRobustCnn}) {
    const Model model = victim_model(kind, config);
    nlohmann::ordered_json entry{{"model", {{"id", model_id(model)}}}};
    entry["boundary"] = to_json(boundary_linearity(model, source, bc));
    out[to_string(kind)] = entry;
  }
  return out;
}

}  // namespace uap

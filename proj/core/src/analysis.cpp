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

#include "uap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "uap/error.hpp"
#include "uap/linearizer.hpp"
#include "uap/parallel.hpp"
#include "uap/rng.hpp"

namespace uap {

namespace {

constexpr std::size_t kEvalBatch = 256;
constexpr std::uint64_t kSubspaceStream = 21;
constexpr std::uint64_t kControlStream = 22;

std::size_t chunk_count(std::size_t n) { return (n + kEvalBatch - 1) / kEvalBatch; }

PerturbationSet universal_for(const Model& model, double epsilon) {
  const AffineMap map = extract_u(linearize(model));
  return universal_attack(map, epsilon);
}

}  // namespace

EvalReport fooling_rate(const Model& model, const Dataset& data, const PerturbationSet& set,
                        const EvalOptions& options) {
  const std::size_t k = model.num_classes();
  const std::size_t d = model.input_dim();
  if (set.num_classes != k) {
    throw DimensionError("perturbation set has k=" + std::to_string(set.num_classes) +
                         ", model has k=" + std::to_string(k));
  }
  if (set.dim != d || data.sample_dim() != d) {
    throw DimensionError("input dimension mismatch between model, data and perturbations");
  }
  if (data.num_classes() != k) throw DimensionError("dataset class count differs from model");
  if (data.size() == 0) throw ArgumentError("empty evaluation set");
  if (set.layout == PerturbationLayout::kPerExample) {
    if (set.vectors.size() != data.size()) {
      throw ArgumentError("per-example set holds " + std::to_string(set.vectors.size()) +
                          " vectors for " + std::to_string(data.size()) + " images");
    }
    if (!set.dataset_id.empty() && set.dataset_id != data.fingerprint()) {
      throw ArgumentError("per-example perturbations were computed on a different dataset");
    }
  }
  set.validate();

  const std::size_t n = data.size();
  std::vector<std::size_t> clean(n), perturbed(n);
  const std::optional<ClipRange> clip =
      options.clip ? std::optional<ClipRange>(ClipRange{}) : std::nullopt;
  parallel_for(chunk_count(n), options.threads, [&](std::size_t c) {
    const std::size_t begin = c * kEvalBatch;
    const std::size_t count = std::min(kEvalBatch, n - begin);
    const Tensor batch = data.batch(begin, count);
    Tensor attacked(batch.shape());
    for (std::size_t i = 0; i < count; ++i) {
      const Tensor& dx = set.for_example(begin + i, data.label(begin + i));
      const auto src = batch.data().subspan(i * d, d);
      auto dst = attacked.mutable_data().subspan(i * d, d);
      for (std::size_t j = 0; j < d; ++j) {
        float v = src[j] + dx[j];
        if (clip) v = std::clamp(v, clip->lo, clip->hi);
        dst[j] = v;
      }
    }
    const std::vector<std::size_t> a = model.predict_batch(batch);
    const std::vector<std::size_t> b = model.predict_batch(attacked);
    std::copy(a.begin(), a.end(), clean.begin() + static_cast<std::ptrdiff_t>(begin));
    std::copy(b.begin(), b.end(), perturbed.begin() + static_cast<std::ptrdiff_t>(begin));
  });

  EvalReport r;
  r.num_classes = k;
  r.n_examples = n;
  r.epsilon = set.epsilon;
  r.source = set.source;
  r.clipped = options.clip;
  r.class_counts.assign(k, 0);
  r.per_class_fooling.assign(k, 0.0);
  r.induced_label_histogram.assign(k, std::vector<std::size_t>(k, 0));
  std::vector<std::size_t> fooled_by_class(k, 0);
  std::size_t correct = 0, fooled = 0, fooled_correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = data.label(i);
    const bool changed = clean[i] != perturbed[i];
    ++r.class_counts[y];
    ++r.induced_label_histogram[y][perturbed[i]];
    fooled += changed;
    fooled_by_class[y] += changed;
    if (clean[i] == y) {
      ++correct;
      fooled_correct += changed;
    }
  }
  r.clean_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  r.overall_fooling_rate = static_cast<double>(fooled) / static_cast<double>(n);
  r.correct_only_fooling_rate =
      correct == 0 ? 0.0 : static_cast<double>(fooled_correct) / static_cast<double>(correct);
  for (std::size_t c = 0; c < k; ++c) {
    if (r.class_counts[c] > 0) {
      r.per_class_fooling[c] =
          static_cast<double>(fooled_by_class[c]) / static_cast<double>(r.class_counts[c]);
    }
  }
  return r;
}

std::vector<std::vector<double>> transfer_matrix(const std::vector<const Model*>& models,
                                                 const Dataset& data, double epsilon,
                                                 const EvalOptions& options) {
  if (models.empty()) throw ArgumentError("transfer matrix needs at least one model");
  for (const Model* m : models) {
    if (m->input_dim() != models[0]->input_dim() ||
        m->num_classes() != models[0]->num_classes()) {
      throw DimensionError("transfer models disagree on input dimension or class count");
    }
  }
  std::vector<std::vector<double>> out(models.size(), std::vector<double>(models.size()));
  for (std::size_t r = 0; r < models.size(); ++r) {
    const PerturbationSet set = universal_for(*models[r], epsilon);
    for (std::size_t c = 0; c < models.size(); ++c) {
      out[r][c] = fooling_rate(*models[c], data, set, options).overall_fooling_rate;
    }
  }
  return out;
}

SpectrumReport perturbation_svd(const Model& model, const Dataset& data,
                                const SpectrumConfig& config) {
  const std::size_t d = model.input_dim();
  const std::size_t half = data.size() / 2;
  const Dataset fit_half = data.slice(0, half);
  const Dataset test_half = data.slice(half, data.size() - half);
  std::size_t columns = half;
  if (config.max_columns > 0) columns = std::min(columns, config.max_columns);
  if (config.rank < 1) throw ArgumentError("rank must be >= 1");
  if (columns < config.rank || d < config.rank) {
    throw ArgumentError("need at least " + std::to_string(config.rank) +
                        " perturbation samples, have " + std::to_string(columns));
  }
  if (test_half.size() == 0) throw ArgumentError("no images left for the attack-test half");

  // P: one FGSM perturbation per column.
  Matrix p(d, columns);
  for (std::size_t begin = 0; begin < columns; begin += kEvalBatch) {
    const std::size_t count = std::min(kEvalBatch, columns - begin);
    const Tensor dx = fgsm_batch(model, fit_half.batch(begin, count),
                                 fit_half.labels().subspan(begin, count), config.epsilon);
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = 0; j < d; ++j) p(j, begin + i) = dx[i * d + j];
    }
  }
  const Svd svd = jacobi_svd(p);

  SpectrumReport r;
  r.fit_examples = columns;
  r.test_examples = test_half.size();
  r.rank = config.rank;
  r.epsilon = config.epsilon;
  r.singular_values = svd.sigma;
  r.singular_value_ratios.resize(svd.sigma.size(), 0.0);
  if (svd.sigma[0] > 0.0) {
    for (std::size_t i = 0; i < svd.sigma.size(); ++i) {
      r.singular_value_ratios[i] = svd.sigma[i] / svd.sigma[0];
    }
  }

  const PerturbationSet universal = universal_for(model, config.epsilon);
  for (const Tensor& v : universal.vectors) {
    double vnorm = 0.0;
    for (float x : v.data()) vnorm += static_cast<double>(x) * x;
    vnorm = std::sqrt(vnorm);
    std::vector<double> row(config.rank, 0.0);
    for (std::size_t c = 0; c < config.rank && vnorm > 0.0; ++c) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += svd.u(j, c) * v[j];
      row[c] = dot / vnorm;
    }
    r.cosine_similarities.push_back(std::move(row));
  }

  PerturbationSet subspace;
  subspace.layout = PerturbationLayout::kPerExample;
  subspace.source = PerturbationSource::kFgsm;
  subspace.epsilon = config.epsilon;
  subspace.num_classes = model.num_classes();
  subspace.dim = d;
  subspace.seed = config.seed;
  subspace.dataset_id = test_half.fingerprint();
  PerturbationSet control = subspace;
  control.source = PerturbationSource::kRandomSign;

  Rng coef_rng = Rng::stream(config.seed, kSubspaceStream);
  Rng control_rng = Rng::stream(config.seed, kControlStream);
  std::vector<double> coef(config.rank), dir(d);
  for (std::size_t i = 0; i < test_half.size(); ++i) {
    for (double& c : coef) c = coef_rng.normal();
    std::fill(dir.begin(), dir.end(), 0.0);
    for (std::size_t c = 0; c < config.rank; ++c) {
      for (std::size_t j = 0; j < d; ++j) dir[j] += coef[c] * svd.u(j, c);
    }
    subspace.vectors.push_back(sign_step(dir, config.epsilon));
    control.vectors.push_back(random_sign(d, config.epsilon, control_rng.next_u64()));
  }
  r.subspace_fooling_rate =
      fooling_rate(model, test_half, subspace, config.eval).overall_fooling_rate;
  r.random_fooling_rate =
      fooling_rate(model, test_half, control, config.eval).overall_fooling_rate;
  return r;
}

PairFit fit_boundary_samples(const Matrix& samples) {
  const std::size_t n = samples.rows;
  const std::size_t d = samples.cols;
  PairFit fit;
  fit.samples = n;
  if (n < 2 || d < 2) return fit;
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  std::vector<bool> varies(d, false);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      mean[j] += samples(i, j);
      varies[j] = varies[j] || samples(i, j) != samples(0, j);
    }
    mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = samples(i, j) - mean[j];
      var[j] += e * e;
    }
  }
  fit.response_index =
      static_cast<std::size_t>(std::max_element(var.begin(), var.end()) - var.begin());
  if (!varies[fit.response_index]) return fit;
  std::vector<std::size_t> predictors;
  for (std::size_t j = 0; j < d; ++j) {
    if (j != fit.response_index && varies[j]) predictors.push_back(j);
  }
  fit.predictors = predictors.size();
  if (n < fit.predictors + 5) return fit;
  fit.sufficient = true;
  Matrix x(n, predictors.size());
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = samples(i, fit.response_index);
    for (std::size_t c = 0; c < predictors.size(); ++c) x(i, c) = samples(i, predictors[c]);
  }
  const LinearFit lf = fit_affine(x, y);
  fit.predicted_r2 = lf.predicted_r2;
  fit.held_out = lf.held_out;
  return fit;
}

namespace {

// Boundary samples for one (from, to) pair, rows in image order.
Matrix boundary_samples(const Model& model, const Dataset& data,
                        const std::vector<std::size_t>& sources, std::size_t from,
                        std::size_t to, const BoundaryConfig& config) {
  const std::size_t d = model.input_dim();
  const std::size_t k = model.num_classes();
  std::vector<Tensor> starts, ends;
  for (std::size_t begin = 0; begin < sources.size(); begin += kEvalBatch) {
    if (config.max_samples_per_pair > 0 && starts.size() >= config.max_samples_per_pair) break;
    const std::size_t count = std::min(kEvalBatch, sources.size() - begin);
    const std::span<const std::size_t> idx(sources.data() + begin, count);
    const Tensor clean = data.gather(idx);
    const std::vector<std::size_t> labels(count, from);
    const std::vector<std::size_t> targets(count, to);
    const Tensor adv = apply(clean, fgsm_batch(model, clean, labels, config.epsilon, targets));
    const std::vector<std::size_t> pred = model.predict_batch(adv);
    for (std::size_t i = 0; i < count; ++i) {
      if (pred[i] != to) continue;
      if (config.max_samples_per_pair > 0 && starts.size() >= config.max_samples_per_pair) break;
      starts.push_back(clean.row(i).reshaped({d}));
      ends.push_back(adv.row(i).reshaped({d}));
    }
  }

  const std::size_t m = starts.size();
  std::vector<double> lo(m, 0.0), hi(m, 1.0);
  std::vector<bool> done(m, false);
  std::vector<Tensor> found(m);
  for (int step = 0; step < config.max_bisection_steps; ++step) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < m; ++i) {
      if (!done[i]) active.push_back(i);
    }
    if (active.empty()) break;
    for (std::size_t begin = 0; begin < active.size(); begin += kEvalBatch) {
      const std::size_t count = std::min(kEvalBatch, active.size() - begin);
      Tensor z({count, d});
      for (std::size_t a = 0; a < count; ++a) {
        const std::size_t i = active[begin + a];
        const float t = static_cast<float>(0.5 * (lo[i] + hi[i]));
        for (std::size_t j = 0; j < d; ++j) {
          z[a * d + j] = starts[i][j] + t * (ends[i][j] - starts[i][j]);
        }
      }
      const Tensor logits = model.forward(model.as_batch(z));
      for (std::size_t a = 0; a < count; ++a) {
        const std::size_t i = active[begin + a];
        const double fi = logits[a * k + from];
        const double fj = logits[a * k + to];
        const double gap = fi - fj;
        const double mid = 0.5 * (lo[i] + hi[i]);
        if (std::fabs(gap) <= config.tau * (std::fabs(fi) + std::fabs(fj) + 1.0)) {
          done[i] = true;
          found[i] = z.row(a).reshaped({d});
        } else if (gap > 0.0) {
          lo[i] = mid;
        } else {
          hi[i] = mid;
        }
      }
    }
  }

  std::size_t rows = 0;
  for (bool b : done) rows += b;
  Matrix out(rows, d);
  std::size_t r = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!done[i]) continue;
    for (std::size_t j = 0; j < d; ++j) out(r, j) = found[i][j];
    ++r;
  }
  return out;
}

}  // namespace

BoundaryReport boundary_linearity(const Model& model, const Dataset& data,
                                  const BoundaryConfig& config) {
  const std::size_t k = model.num_classes();
  if (data.sample_dim() != model.input_dim() || data.num_classes() != k) {
    throw DimensionError("dataset does not match the model");
  }
  if (!(config.tau > 0.0)) throw ArgumentError("tau must be positive");

  // Correctly classified images of each class.
  std::vector<std::vector<std::size_t>> sources(k);
  for (std::size_t begin = 0; begin < data.size(); begin += kEvalBatch) {
    const std::size_t count = std::min(kEvalBatch, data.size() - begin);
    const std::vector<std::size_t> pred = model.predict_batch(data.batch(begin, count));
    for (std::size_t i = 0; i < count; ++i) {
      if (pred[i] == data.label(begin + i)) sources[pred[i]].push_back(begin + i);
    }
  }

  BoundaryReport report;
  report.epsilon = config.epsilon;
  report.tau = config.tau;
  report.pairs.resize(k * (k - 1));
  parallel_for(report.pairs.size(), config.threads, [&](std::size_t p) {
    const std::size_t from = p / (k - 1);
    std::size_t to = p % (k - 1);
    if (to >= from) ++to;
    const Matrix z = boundary_samples(model, data, sources[from], from, to, config);
    PairFit fit = fit_boundary_samples(z);
    fit.from = from;
    fit.to = to;
    report.pairs[p] = fit;
  });
  for (const PairFit& f : report.pairs) {
    if (!f.sufficient) continue;
    ++report.valid_pairs;
    report.planar_pairs += *f.predicted_r2 >= 0.9;
  }
  return report;
}

ClassHistogram per_class_histogram(const EvalReport& report, int bins) {
  if (bins < 1) throw ArgumentError("bins must be >= 1");
  ClassHistogram h;
  const auto nb = static_cast<std::size_t>(bins);
  h.counts.assign(nb, 0);
  for (std::size_t b = 0; b <= nb; ++b) {
    h.edges.push_back(static_cast<double>(b) / static_cast<double>(nb));
  }
  for (double rate : report.per_class_fooling) {
    const double scaled = std::floor(std::clamp(rate, 0.0, 1.0) * static_cast<double>(nb));
    ++h.counts[std::min(nb - 1, static_cast<std::size_t>(scaled))];
  }
  return h;
}

double mean_abs_per_class_difference(const EvalReport& a, const EvalReport& b) {
  if (a.per_class_fooling.size() != b.per_class_fooling.size() ||
      a.per_class_fooling.empty()) {
    throw DimensionError("reports cover different class sets");
  }
  double s = 0.0;
  for (std::size_t c = 0; c < a.per_class_fooling.size(); ++c) {
    s += std::fabs(a.per_class_fooling[c] - b.per_class_fooling[c]);
  }
  return s / static_cast<double>(a.per_class_fooling.size());
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  return {{"n_examples", r.n_examples},
          {"num_classes", r.num_classes},
          {"epsilon", r.epsilon},
          {"source", to_string(r.source)},
          {"clipped", r.clipped},
          {"clean_accuracy", r.clean_accuracy},
          {"overall_fooling_rate", r.overall_fooling_rate},
          {"correct_only_fooling_rate", r.correct_only_fooling_rate},
          {"class_counts", r.class_counts},
          {"per_class_fooling", r.per_class_fooling},
          {"induced_label_histogram", r.induced_label_histogram}};
}

nlohmann::ordered_json to_json(const SpectrumReport& r) {
  return {{"fit_examples", r.fit_examples},
          {"test_examples", r.test_examples},
          {"rank", r.rank},
          {"epsilon", r.epsilon},
          {"subspace_fooling_rate", r.subspace_fooling_rate},
          {"random_fooling_rate", r.random_fooling_rate},
          {"singular_values", r.singular_values},
          {"singular_value_ratios", r.singular_value_ratios},
          {"cosine_similarities", r.cosine_similarities}};
}

nlohmann::ordered_json to_json(const BoundaryReport& r) {
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const PairFit& f : r.pairs) {
    nlohmann::ordered_json row{{"from", f.from},
                               {"to", f.to},
                               {"samples", f.samples},
                               {"predictors", f.predictors},
                               {"response_index", f.response_index},
                               {"sufficient", f.sufficient}};
    row["held_out"] = f.held_out;
    row["predicted_r2"] =
        f.predicted_r2 ? nlohmann::ordered_json(*f.predicted_r2) : nlohmann::ordered_json();
    pairs.push_back(row);
  }
  return {{"epsilon", r.epsilon},
          {"tau", r.tau},
          {"fit_target", r.fit_target},
          {"valid_pairs", r.valid_pairs},
          {"planar_pairs", r.planar_pairs},
          {"total_pairs", r.pairs.size()},
          {"pairs", pairs}};
}

nlohmann::ordered_json to_json(const ClassHistogram& h) {
  return {{"edges", h.edges}, {"counts", h.counts}};
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string per_class_csv(const EvalReport& r) {
  std::string out = "class,count,fooling_rate\n";
  for (std::size_t c = 0; c < r.per_class_fooling.size(); ++c) {
    out += std::to_string(c) + ',' + std::to_string(r.class_counts[c]) + ',' +
           fmt(r.per_class_fooling[c]) + '\n';
  }
  return out;
}

std::string spectrum_csv(const SpectrumReport& r) {
  std::string out = "index,singular_value,ratio\n";
  for (std::size_t i = 0; i < r.singular_values.size(); ++i) {
    out += std::to_string(i + 1) + ',' + fmt(r.singular_values[i]) + ',' +
           fmt(r.singular_value_ratios[i]) + '\n';
  }
  return out;
}

std::string boundary_csv(const BoundaryReport& r) {
  std::string out = "from,to,samples,predictors,sufficient,predicted_r2\n";
  for (const PairFit& f : r.pairs) {
    out += std::to_string(f.from) + ',' + std::to_string(f.to) + ',' +
           std::to_string(f.samples) + ',' + std::to_string(f.predictors) + ',' +
           (f.sufficient ? "1" : "0") + ',' + (f.predicted_r2 ? fmt(*f.predicted_r2) : "") +
           '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace uap

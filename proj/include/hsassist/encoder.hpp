// Copyright 2026 The hs-assist Authors
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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hsassist/corpus.hpp"
#include "hsassist/errors.hpp"
#include "hsassist/text.hpp"

namespace hsassist {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct EncoderConfig {
  std::uint64_t dim = 768;
  std::uint64_t epochs = 100;
  double learning_rate = 2.0;
  std::uint64_t batch_size = 32;
  std::uint64_t seed = 0;
  std::uint64_t min_count = 1;

  void validate() const {
    if (dim < 1) throw ValidationError("dim must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (min_count < 1) throw ValidationError("min_count must be >= 1");
  }

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Everything inference needs: tokenizer statistics, token embeddings
/// (|V| x d), the linear classification head (d x C), the sorted label
/// index and the softmax temperature.
struct ModelArtifact {
  Vocabulary vocab;
  IdfTable idf;
  Matrix token_embeddings;
  Matrix head;
  std::vector<HsCode> labels;
  double temperature = 1.0;
  EncoderConfig config;
  std::string version;

  std::size_t dim() const noexcept { return token_embeddings.cols(); }
  std::size_t num_classes() const noexcept { return labels.size(); }

  std::optional<std::size_t> label_index(const HsCode& label) const {
    auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it == labels.end() || *it != label) return std::nullopt;
    return static_cast<std::size_t>(it - labels.begin());
  }

  void validate() const {
    if (token_embeddings.rows() != vocab.size())
      throw ModelFormatError("embedding rows do not match vocabulary size");
    if (head.rows() != token_embeddings.cols()) throw ModelFormatError("head rows do not match embedding dim");
    if (head.cols() != labels.size()) throw ModelFormatError("head columns do not match label count");
    if (idf.weights.size() != vocab.size()) throw ModelFormatError("idf size does not match vocabulary");
    if (!(temperature > 0.0)) throw ModelFormatError("temperature must be positive");
    for (std::size_t i = 1; i < labels.size(); ++i)
      if (!(labels[i - 1] < labels[i])) throw ModelFormatError("labels must be unique and sorted");
  }

  friend bool operator==(const ModelArtifact&, const ModelArtifact&) = default;
};

// ---------------------------------------------------------------------------
// Inference

struct Encoding {
  std::vector<double> embedding;
  std::size_t in_vocabulary = 0;
  /// Set when no token was in the vocabulary; the embedding is then zero.
  bool low_confidence = false;
};

inline std::vector<TokenId> token_ids(const Vocabulary& vocab, std::span<const Token> tokens) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens)
    if (auto id = vocab.find(t)) ids.push_back(*id);
  return ids;
}

/// Mean of the embedding rows of `ids` (zero vector for an empty list).
inline std::vector<double> mean_pool(const Matrix& embeddings, std::span<const TokenId> ids) {
  std::vector<double> h(embeddings.cols(), 0.0);
  if (ids.empty()) return h;
  for (TokenId id : ids) {
    auto row = embeddings.row(id);
    for (std::size_t j = 0; j < h.size(); ++j) h[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (double& x : h) x *= inv;
  return h;
}

inline Encoding encode(const ModelArtifact& model, std::span<const Token> tokens) {
  if (tokens.empty()) throw EmptyDescriptionError("description has no tokens");
  auto ids = token_ids(model.vocab, tokens);
  Encoding enc;
  enc.in_vocabulary = ids.size();
  enc.low_confidence = ids.empty();
  enc.embedding = mean_pool(model.token_embeddings, ids);
  return enc;
}

/// h · W
inline std::vector<double> compute_logits(const Matrix& head, std::span<const double> h) {
  std::vector<double> z(head.cols(), 0.0);
  for (std::size_t j = 0; j < head.rows(); ++j) {
    const double hj = h[j];
    if (hj == 0.0) continue;
    auto w = head.row(j);
    for (std::size_t c = 0; c < z.size(); ++c) z[c] += hj * w[c];
  }
  return z;
}

/// softmax(z / temperature), shifted by the max logit for stability.
inline std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp((logits[i] - zmax) / temperature);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

/// log softmax(z / temperature)[label]
inline double log_softmax_at(std::span<const double> logits, std::size_t label, double temperature = 1.0) {
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp((z - zmax) / temperature);
  return (logits[label] - zmax) / temperature - std::log(sum);
}

inline std::vector<double> forward(const ModelArtifact& model, std::span<const Token> tokens) {
  auto enc = encode(model, tokens);
  auto z = compute_logits(model.head, enc.embedding);
  return softmax(z);
}

struct RankedLabel {
  HsCode code;
  double raw_prob = 0.0;
  double calibrated_prob = 0.0;
};

struct Prediction {
  std::vector<RankedLabel> ranked;
  std::vector<double> description_embedding;
  bool low_confidence = false;
};

namespace detail {

inline void rank(std::vector<RankedLabel>& ranked) {
  std::sort(ranked.begin(), ranked.end(), [](const RankedLabel& a, const RankedLabel& b) {
    if (a.calibrated_prob != b.calibrated_prob) return a.calibrated_prob > b.calibrated_prob;
    return a.code < b.code;
  });
}

}  // namespace detail

/// Full ranking at subheading or heading level. Heading probabilities are the
/// sums of their subheadings' probabilities.
inline Prediction predict(const ModelArtifact& model, std::span<const Token> tokens, HsLevel level) {
  if (level == HsLevel::chapter) throw ValidationError("prediction level must be heading or subheading");
  auto enc = encode(model, tokens);
  auto z = compute_logits(model.head, enc.embedding);
  auto raw = softmax(z);
  auto cal = softmax(z, model.temperature);

  Prediction out;
  out.description_embedding = std::move(enc.embedding);
  out.low_confidence = enc.low_confidence;
  if (level == HsLevel::subheading) {
    out.ranked.reserve(model.labels.size());
    for (std::size_t c = 0; c < model.labels.size(); ++c) out.ranked.push_back({model.labels[c], raw[c], cal[c]});
  } else {
    // labels are sorted, so subheadings of one heading are contiguous
    for (std::size_t c = 0; c < model.labels.size(); ++c) {
      auto heading = model.labels[c].heading();
      if (out.ranked.empty() || out.ranked.back().code != heading) out.ranked.push_back({heading, 0.0, 0.0});
      out.ranked.back().raw_prob += raw[c];
      out.ranked.back().calibrated_prob += cal[c];
    }
  }
  detail::rank(out.ranked);
  return out;
}

inline Prediction predict_topk(const ModelArtifact& model, std::string_view description, std::size_t k,
                               HsLevel level) {
  if (k < 1) throw ValidationError("k must be >= 1");
  auto tokens = tokenize(description);
  if (tokens.empty()) throw EmptyDescriptionError("description is empty");
  auto out = predict(model, tokens, level);
  if (out.ranked.size() > k) out.ranked.resize(k);
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct TrainingExample {
  std::vector<TokenId> ids;
  std::size_t label = 0;
};

inline std::vector<TrainingExample> make_examples(const ModelArtifact& model, const CaseCollection& cases) {
  std::vector<TrainingExample> out;
  out.reserve(cases.size());
  for (const auto& c : cases) {
    auto label = model.label_index(c.label);
    if (!label) throw LabelCoverageError("label " + c.label.digits() + " of case '" + c.id + "' is not in the label index");
    auto tokens = tokenize(c.description);
    out.push_back({token_ids(model.vocab, tokens), *label});
  }
  return out;
}

/// Sparse gradient of the mean cross-entropy over a batch.
struct Gradient {
  double loss = 0.0;
  Matrix head;
  std::map<TokenId, std::vector<double>> embedding_rows;
};

/// Mean categorical cross-entropy of the examples under `model` (T = 1).
inline double cross_entropy(const ModelArtifact& model, std::span<const TrainingExample> examples) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples) {
    auto h = mean_pool(model.token_embeddings, ex.ids);
    auto z = compute_logits(model.head, h);
    total -= log_softmax_at(z, ex.label);
  }
  return total / static_cast<double>(examples.size());
}

/// Loss L = -(1/n) sum log p(y_i | x_i) and its analytic gradient with
/// respect to the head and every embedding row used by the batch.
inline Gradient loss_and_gradient(const ModelArtifact& model, std::span<const TrainingExample> batch) {
  const std::size_t d = model.dim();
  const std::size_t C = model.num_classes();
  Gradient g;
  g.head = Matrix(d, C);
  if (batch.empty()) return g;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  std::vector<double> dh(d);
  for (const auto& ex : batch) {
    auto h = mean_pool(model.token_embeddings, ex.ids);
    auto z = compute_logits(model.head, h);
    auto p = softmax(z);
    g.loss -= std::log(p[ex.label]) * inv_n;

    // dL/dz = (p - y) / n
    auto& dz = p;
    dz[ex.label] -= 1.0;
    for (double& x : dz) x *= inv_n;

    for (std::size_t j = 0; j < d; ++j) {
      auto grow = g.head.row(j);
      auto wrow = model.head.row(j);
      double acc = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        grow[c] += h[j] * dz[c];
        acc += wrow[c] * dz[c];
      }
      dh[j] = acc;
    }
    if (ex.ids.empty()) continue;
    const double share = 1.0 / static_cast<double>(ex.ids.size());
    for (TokenId id : ex.ids) {
      auto& row = g.embedding_rows[id];
      if (row.empty()) row.assign(d, 0.0);
      for (std::size_t j = 0; j < d; ++j) row[j] += dh[j] * share;
    }
  }
  return g;
}

inline void apply_gradient(ModelArtifact& model, const Gradient& g, double learning_rate) {
  auto& w = model.head.data();
  const auto& gw = g.head.data();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= learning_rate * gw[i];
  for (const auto& [id, grad] : g.embedding_rows) {
    auto row = model.token_embeddings.row(id);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] -= learning_rate * grad[j];
  }
}

inline double top1_accuracy(const ModelArtifact& model, std::span<const TrainingExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : examples) {
    auto z = compute_logits(model.head, mean_pool(model.token_embeddings, ex.ids));
    // first maximum = smallest label on ties, matching the ranking order
    auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    hits += best == ex.label;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

namespace detail {

/// 53-bit uniform double in [0, 1) from a standard-specified engine, so
/// artifacts do not depend on the standard library's distributions.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

inline void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace detail

/// FNV-1a digest of every learned quantity; used as the model version.
inline std::string model_fingerprint(const ModelArtifact& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : model.vocab.tokens()) detail::hash_bytes(h, t.data(), t.size() + 1);
  detail::hash_bytes(h, model.idf.weights.data(), model.idf.weights.size() * sizeof(double));
  detail::hash_bytes(h, model.token_embeddings.data().data(), model.token_embeddings.data().size() * sizeof(double));
  detail::hash_bytes(h, model.head.data().data(), model.head.data().size() * sizeof(double));
  for (const auto& l : model.labels) detail::hash_bytes(h, l.digits().data(), l.digits().size());
  detail::hash_bytes(h, &model.temperature, sizeof(double));
  char buf[32];
  std::snprintf(buf, sizeof buf, "hsx-%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Fresh model: embeddings uniform in [-0.5/d, 0.5/d], zero head.
inline ModelArtifact initialize_model(Vocabulary vocab, IdfTable idf, std::vector<HsCode> labels,
                                      const EncoderConfig& config) {
  config.validate();
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  ModelArtifact m;
  m.vocab = std::move(vocab);
  m.idf = std::move(idf);
  m.labels = std::move(labels);
  m.config = config;
  const std::size_t d = config.dim;
  m.token_embeddings = Matrix(m.vocab.size(), d);
  m.head = Matrix(d, m.labels.size());
  std::mt19937_64 rng(config.seed);
  const double scale = 0.5 / static_cast<double>(d);
  for (double& x : m.token_embeddings.data()) x = (2.0 * detail::uniform01(rng) - 1.0) * scale;
  m.version = model_fingerprint(m);
  return m;
}

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_top1 = 0.0;
};

struct TrainResult {
  ModelArtifact model;
  double initial_loss = 0.0;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;  // 0 = initialization
};

/// Mini-batch gradient descent on the mean cross-entropy. Returns the
/// parameters from the epoch with the highest validation top-1 accuracy
/// (the earliest such epoch on ties; the last epoch without validation data).
///
/// The label index is the sorted union of train and validation labels unless
/// `label_index` is given, in which case every label must be covered by it.
inline TrainResult train_with_history(const CaseCollection& train_cases, const CaseCollection& val_cases,
                                      const EncoderConfig& config,
                                      std::optional<std::vector<HsCode>> label_index = std::nullopt) {
  config.validate();
  if (train_cases.empty()) throw EmptyCorpusError("training set is empty");
  std::vector<HsCode> labels;
  if (label_index) {
    labels = *label_index;
  } else {
    for (const auto& c : train_cases) labels.push_back(c.label);
    for (const auto& c : val_cases) labels.push_back(c.label);
  }
  auto vocab = build_vocabulary(train_cases, config.min_count);
  auto idf = compute_idf(train_cases, vocab);
  TrainResult result{initialize_model(std::move(vocab), std::move(idf), std::move(labels), config), 0.0, {}, 0};
  ModelArtifact& model = result.model;

  auto train_examples = make_examples(model, train_cases);
  auto val_examples = make_examples(model, val_cases);
  result.initial_loss = cross_entropy(model, train_examples);

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_val = val_examples.empty() ? 0.0 : top1_accuracy(model, val_examples);
  Matrix best_embeddings = model.token_embeddings;
  Matrix best_head = model.head;
  std::vector<TrainingExample> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    detail::shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
        batch.push_back(train_examples[order[i]]);
      apply_gradient(model, loss_and_gradient(model, batch), config.learning_rate);
    }
    EpochStats stats{epoch, cross_entropy(model, train_examples), 0.0};
    if (!val_examples.empty()) {
      stats.val_top1 = top1_accuracy(model, val_examples);
      if (stats.val_top1 > best_val) {
        best_val = stats.val_top1;
        best_embeddings = model.token_embeddings;
        best_head = model.head;
        result.best_epoch = epoch;
      }
    }
    result.history.push_back(stats);
  }
  if (!val_examples.empty()) {
    model.token_embeddings = std::move(best_embeddings);
    model.head = std::move(best_head);
  } else {
    result.best_epoch = config.epochs;
  }
  model.version = model_fingerprint(model);
  return result;
}

inline ModelArtifact train(const CaseCollection& train_cases, const CaseCollection& val_cases,
                           const EncoderConfig& config) {
  return train_with_history(train_cases, val_cases, config).model;
}

// ---------------------------------------------------------------------------
// Temperature scaling

/// Mean negative log-likelihood of `labels` under softmax(logits / T).
inline double temperature_nll(std::span<const std::vector<double>> logits, std::span<const std::size_t> labels,
                              double temperature) {
  if (logits.size() != labels.size()) throw LengthMismatchError("logits and labels differ in length");
  if (logits.empty()) throw EmptyCorpusError("no samples");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total -= log_softmax_at(logits[i], labels[i], temperature);
  return total / static_cast<double>(logits.size());
}

struct TemperatureSearch {
  double lower = 0.05;
  double upper = 20.0;
  double tolerance = 1e-4;
};

/// Golden-section search for the NLL-minimizing temperature. NLL is convex in
/// 1/T, hence unimodal in T. Falls back to T = 1 if the search result is not
/// at least as good.
inline double fit_temperature(std::span<const std::vector<double>> logits, std::span<const std::size_t> labels,
                              TemperatureSearch search = {}) {
  auto f = [&](double t) { return temperature_nll(logits, labels, t); };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = search.lower, b = search.upper;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > search.tolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double t = 0.5 * (a + b);
  return f(t) <= f(1.0) ? t : 1.0;
}

/// Per-sample logits (at T = 1) and label indices of `cases` under `model`.
inline std::pair<std::vector<std::vector<double>>, std::vector<std::size_t>> logits_and_labels(
    const ModelArtifact& model, const CaseCollection& cases) {
  std::pair<std::vector<std::vector<double>>, std::vector<std::size_t>> out;
  for (const auto& ex : make_examples(model, cases)) {
    out.first.push_back(compute_logits(model.head, mean_pool(model.token_embeddings, ex.ids)));
    out.second.push_back(ex.label);
  }
  return out;
}

inline ModelArtifact calibrate_temperature(ModelArtifact model, const CaseCollection& val_cases) {
  if (val_cases.empty()) throw EmptyCorpusError("calibration needs validation cases");
  auto [logits, labels] = logits_and_labels(model, val_cases);
  model.temperature = fit_temperature(logits, labels);
  model.version = model_fingerprint(model);
  return model;
}

}  // namespace hsassist

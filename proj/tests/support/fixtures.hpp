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

// Test-only builders for hand-made and random models, manuals and KBs.

#pragma once

#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hsassist/hsassist.hpp"

namespace hsassist::testing {

/// Model over an explicit vocabulary. `rows[i]` is the embedding of
/// `tokens[i]`; idf defaults to 1 for every token.
inline ModelArtifact make_model(const std::vector<std::string>& tokens, const std::vector<std::vector<double>>& rows,
                                const std::vector<std::string>& labels = {"847110"},
                                std::vector<double> idf = {}) {
  ModelArtifact m;
  m.vocab = Vocabulary(tokens, std::vector<std::uint64_t>(tokens.size(), 1), 1);
  const std::size_t d = rows.empty() ? 1 : rows.front().size();
  m.token_embeddings = Matrix(tokens.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) m.token_embeddings(i, j) = rows[i][j];
  for (const auto& l : labels) m.labels.push_back(HsCode::parse(l));
  std::sort(m.labels.begin(), m.labels.end());
  m.head = Matrix(d, m.labels.size());
  if (idf.empty()) idf.assign(tokens.size(), 1.0);
  m.idf.weights = std::move(idf);
  m.idf.n_docs = 1;
  m.idf.oov_weight = m.idf.weights.empty() ? 1.0 : *std::max_element(m.idf.weights.begin(), m.idf.weights.end());
  m.config.dim = d;
  m.version = "test";
  return m;
}

inline double gaussian(std::mt19937_64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Random model with tokens "w0".."w{n-1}", Gaussian embeddings and head.
inline ModelArtifact random_model(std::mt19937_64& rng, std::size_t n_vocab, std::size_t dim,
                                  const std::vector<std::string>& labels, double head_scale = 1.0) {
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> rows;
  std::vector<double> idf;
  for (std::size_t i = 0; i < n_vocab; ++i) {
    tokens.push_back("w" + std::to_string(i));
    std::vector<double> r(dim);
    for (double& x : r) x = gaussian(rng);
    rows.push_back(std::move(r));
    idf.push_back(1.0 + std::uniform_real_distribution<double>(0.0, 3.0)(rng));
  }
  auto m = make_model(tokens, rows, labels, idf);
  for (double& x : m.head.data()) x = head_scale * gaussian(rng);
  return m;
}

/// Space-joined random words; each is out of vocabulary ("zz<n>") with
/// probability `oov`.
inline std::string random_text(std::mt19937_64& rng, std::size_t n_vocab, std::size_t length, double oov = 0.1) {
  std::string s;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < length; ++i) {
    if (i) s += ' ';
    if (u(rng) < oov) {
      s += "zz" + std::to_string(uniform_index(rng, 50));
    } else {
      s += "w" + std::to_string(uniform_index(rng, n_vocab));
    }
  }
  return s;
}

struct RetrievalInstance {
  ModelArtifact model;
  Manual manual;
  KnowledgeBase kb;
  HsCode heading;
  std::string description;
};

/// One heading with up to `max_sentences` sentences and up to `max_kb` KB
/// entries whose evidence cites random sentences of that heading.
inline RetrievalInstance random_retrieval_instance(std::mt19937_64& rng, std::size_t max_sentences = 60,
                                                   std::size_t max_kb = 20) {
  RetrievalInstance inst;
  const std::size_t n_vocab = 30 + uniform_index(rng, 40);
  const std::size_t dim = 4 + uniform_index(rng, 12);
  inst.model = random_model(rng, n_vocab, dim, {"847110", "847120"});
  inst.heading = HsCode::parse("8471");

  HeadingManual h;
  h.heading = inst.heading;
  h.title = "random";
  const std::size_t n_sentences = 1 + uniform_index(rng, max_sentences);
  for (std::size_t i = 0; i < n_sentences; ++i)
    h.sentences.push_back({make_sid(h.heading, i), random_text(rng, n_vocab, 1 + uniform_index(rng, 20))});
  inst.manual.add(h);

  const std::size_t n_kb = 1 + uniform_index(rng, max_kb);
  for (std::size_t j = 0; j < n_kb; ++j) {
    KnowledgeBaseEntry e;
    e.case_id = "kb" + std::to_string(j);
    e.description = random_text(rng, n_vocab, 2 + uniform_index(rng, 10));
    e.label = HsCode::parse("847110");
    const std::size_t a = 1 + uniform_index(rng, 4);
    for (std::size_t t = 0; t < a; ++t) e.evidence.insert(make_sid(h.heading, uniform_index(rng, n_sentences)));
    inst.kb.entries.push_back(std::move(e));
  }
  inst.description = random_text(rng, n_vocab, 1 + uniform_index(rng, 15));
  return inst;
}

inline CaseCollection cases_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  return load_cases(in);
}

inline Manual manual_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  return load_manual(in);
}

inline KnowledgeBase kb_from_jsonl(const std::string& text, const Manual& manual) {
  std::istringstream in(text);
  return load_knowledge_base(in, manual);
}

inline DecisionCase make_case(std::string id, std::string date, std::string description, std::string hs6,
                              Origin origin = Origin::general) {
  return {std::move(id), *parse_date(date), std::move(description), HsCode::parse(hs6, HsLevel::subheading), origin};
}

/// Synthetic corpus, its temporal split and a calibrated model trained on it.
struct TrainedCorpus {
  SyntheticCorpus corpus;
  TemporalSplit split;
  ModelArtifact model;
};

inline TrainedCorpus trained_synthetic(const SyntheticSpec& spec, const EncoderConfig& config) {
  TrainedCorpus t;
  t.corpus = generate_synthetic_corpus(spec);
  t.split = temporal_split(t.corpus.cases, spec.n_val, spec.n_test);
  t.model = calibrate_temperature(train(t.split.train, t.split.val, config), t.split.val);
  return t;
}

/// A small corpus that trains in well under a second.
inline const TrainedCorpus& small_trained_corpus() {
  static const TrainedCorpus t = [] {
    SyntheticSpec spec;
    spec.n_headings = 4;
    spec.n_subheadings_per_heading = 3;
    spec.n_train = 200;
    spec.n_val = 40;
    spec.n_test = 40;
    EncoderConfig config;
    config.dim = 16;
    config.epochs = 20;
    config.seed = 3;
    return trained_synthetic(spec, config);
  }();
  return t;
}

}  // namespace hsassist::testing

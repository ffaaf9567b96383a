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

// Evidence retrieval over one heading's manual. Each sentence M gets
//
//   s(x, M)   = s_text(x, M) + lambda * s_expert(x, M)
//   s_text    = sum over description tokens d of idf(d) * align(d, M)
//   align     = max over sentence tokens m of cos(emb(d), emb(m))
//   s_expert  = sum over the k_case KB cases most similar to x of
//               cos(enc(x), enc(case)) * [M quoted as evidence by case]

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsassist/corpus.hpp"
#include "hsassist/encoder.hpp"
#include "hsassist/errors.hpp"

namespace hsassist {

struct RetrievalConfig {
  double lambda = 0.3;
  std::size_t k_case = 10;
  std::size_t n_sentences = 7;
  bool clamp_negative_kb_sim = false;
  /// Divide s_text by the description's total idf mass.
  bool normalize_text_score = false;

  void validate() const {
    if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
    if (k_case < 1) throw ValidationError("k_case must be >= 1");
    if (n_sentences < 1) throw ValidationError("n_sentences must be >= 1");
  }
};

/// Cosine similarity; 0 when either vector has zero norm.
inline double cos_sim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw DimensionMismatchError("cos_sim on vectors of length " + std::to_string(u.size()) + " and " +
                                 std::to_string(v.size()));
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0);
}

namespace detail {

inline double align_ids(const ModelArtifact& model, TokenId token, std::span<const TokenId> sentence) {
  if (sentence.empty()) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  auto u = model.token_embeddings.row(token);
  for (TokenId t : sentence) best = std::max(best, cos_sim(u, model.token_embeddings.row(t)));
  return best;
}

inline double text_similarity_ids(const ModelArtifact& model, const IdfTable& idf,
                                  std::span<const std::optional<TokenId>> description,
                                  std::span<const TokenId> sentence, bool normalize) {
  double score = 0.0, mass = 0.0;
  for (const auto& id : description) {
    const double w = idf.weight(id);
    mass += w;
    if (id) score += w * align_ids(model, *id, sentence);
  }
  if (normalize && mass > 0.0) score /= mass;
  return score;
}

inline std::vector<std::optional<TokenId>> lookup(const Vocabulary& vocab, std::span<const Token> tokens) {
  std::vector<std::optional<TokenId>> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(vocab.find(t));
  return out;
}

}  // namespace detail

/// Best cosine between `token` and any token of `sentence`; 0 when either
/// side is out of vocabulary.
inline double align(const Token& token, const ManualSentence& sentence, const ModelArtifact& model) {
  auto id = model.vocab.find(token);
  if (!id) return 0.0;
  auto sentence_tokens = tokenize(sentence.text);
  auto ids = token_ids(model.vocab, sentence_tokens);
  return detail::align_ids(model, *id, ids);
}

inline double text_similarity(std::span<const Token> description, const ManualSentence& sentence,
                              const ModelArtifact& model, const IdfTable& idf, bool normalize = false) {
  if (description.empty()) throw EmptyDescriptionError("description has no tokens");
  auto sentence_tokens = tokenize(sentence.text);
  auto ids = token_ids(model.vocab, sentence_tokens);
  auto desc = detail::lookup(model.vocab, description);
  return detail::text_similarity_ids(model, idf, desc, ids, normalize);
}

// ---------------------------------------------------------------------------
// Knowledge-base neighbourhood

struct KbNeighbor {
  const KnowledgeBaseEntry* entry = nullptr;
  double similarity = 0.0;
};

struct KbNeighborhood {
  std::vector<KbNeighbor> neighbors;  // descending similarity, then case_id
};

/// Precomputed description embeddings of every KB entry.
class KbIndex {
 public:
  KbIndex(const ModelArtifact& model, const KnowledgeBase& kb) : kb_(&kb) {
    embeddings_.reserve(kb.size());
    for (const auto& e : kb.entries) {
      auto tokens = tokenize(e.description);
      embeddings_.push_back(mean_pool(model.token_embeddings, token_ids(model.vocab, tokens)));
    }
  }

  const KnowledgeBase& kb() const noexcept { return *kb_; }
  std::span<const double> embedding(std::size_t i) const { return embeddings_[i]; }

  /// The `k_case` entries most similar to `query`. An entry whose case id
  /// equals `exclude_case_id` is skipped (leave-one-out evaluation).
  KbNeighborhood topk(std::span<const double> query, std::size_t k_case,
                      std::string_view exclude_case_id = {}) const {
    if (kb_->empty()) throw EmptyKnowledgeBaseError("knowledge base is empty");
    KbNeighborhood out;
    out.neighbors.reserve(kb_->size());
    for (std::size_t i = 0; i < kb_->size(); ++i) {
      const auto& e = kb_->entries[i];
      if (!exclude_case_id.empty() && e.case_id == exclude_case_id) continue;
      out.neighbors.push_back({&e, cos_sim(query, embeddings_[i])});
    }
    auto cmp = [](const KbNeighbor& a, const KbNeighbor& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return a.entry->case_id < b.entry->case_id;
    };
    if (out.neighbors.size() > k_case) {
      std::partial_sort(out.neighbors.begin(), out.neighbors.begin() + static_cast<std::ptrdiff_t>(k_case),
                        out.neighbors.end(), cmp);
      out.neighbors.resize(k_case);
    } else {
      std::sort(out.neighbors.begin(), out.neighbors.end(), cmp);
    }
    return out;
  }

 private:
  const KnowledgeBase* kb_;
  std::vector<std::vector<double>> embeddings_;
};

inline KbNeighborhood kb_topk_cases(std::span<const Token> description, const KnowledgeBase& kb,
                                    const ModelArtifact& model, std::size_t k_case) {
  auto enc = encode(model, description);
  return KbIndex(model, kb).topk(enc.embedding, k_case);
}

inline double expert_score(std::string_view sid, const KbNeighborhood& neighborhood, bool clamp_negative = false) {
  double score = 0.0;
  for (const auto& n : neighborhood.neighbors) {
    if (!n.entry->cites(sid)) continue;
    score += clamp_negative ? std::max(0.0, n.similarity) : n.similarity;
  }
  return score;
}

// ---------------------------------------------------------------------------
// Sentence scoring

struct ScoredSentence {
  std::string sid;
  double s_text = 0.0;
  double s_expert = 0.0;
  double s_total = 0.0;
};

inline ScoredSentence relevance_score(std::span<const Token> description, const ManualSentence& sentence,
                                      const ModelArtifact& model, const IdfTable& idf,
                                      const KbNeighborhood& neighborhood, const RetrievalConfig& config) {
  ScoredSentence s;
  s.sid = sentence.sid;
  s.s_text = text_similarity(description, sentence, model, idf, config.normalize_text_score);
  s.s_expert = expert_score(sentence.sid, neighborhood, config.clamp_negative_kb_sim);
  s.s_total = s.s_text + config.lambda * s.s_expert;
  return s;
}

/// Orders by s_total descending, then by sentence position in the manual.
inline void sort_scored(std::vector<ScoredSentence>& scored) {
  auto key = [](const ScoredSentence& s) {
    auto p = parse_sid(s.sid);
    return p ? std::make_pair(p->heading.digits(), p->index) : std::make_pair(s.sid, std::size_t{0});
  };
  std::stable_sort(scored.begin(), scored.end(), [&](const ScoredSentence& a, const ScoredSentence& b) {
    if (a.s_total != b.s_total) return a.s_total > b.s_total;
    return key(a) < key(b);
  });
}

/// Scores every sentence of one heading against a description whose KB
/// neighbourhood has already been computed.
inline std::vector<ScoredSentence> score_heading(std::span<const Token> description, const HeadingManual& heading,
                                                 const ModelArtifact& model, const IdfTable& idf,
                                                 const KbNeighborhood& neighborhood, const RetrievalConfig& config) {
  if (description.empty()) throw EmptyDescriptionError("description has no tokens");
  auto desc = detail::lookup(model.vocab, description);
  std::vector<ScoredSentence> scored;
  scored.reserve(heading.sentences.size());
  for (const auto& sentence : heading.sentences) {
    auto sentence_tokens = tokenize(sentence.text);
    auto ids = token_ids(model.vocab, sentence_tokens);
    ScoredSentence s;
    s.sid = sentence.sid;
    s.s_text = detail::text_similarity_ids(model, idf, desc, ids, config.normalize_text_score);
    s.s_expert = expert_score(sentence.sid, neighborhood, config.clamp_negative_kb_sim);
    s.s_total = s.s_text + config.lambda * s.s_expert;
    scored.push_back(std::move(s));
  }
  sort_scored(scored);
  return scored;
}

/// Top `config.n_sentences` evidence sentences of `heading` for `description`.
inline std::vector<ScoredSentence> retrieve_evidence(std::string_view description, const HsCode& heading,
                                                     const Manual& manual, const KnowledgeBase& kb,
                                                     const ModelArtifact& model, const IdfTable& idf,
                                                     const RetrievalConfig& config) {
  config.validate();
  const auto* h = manual.find(heading.truncate(HsLevel::heading));
  if (!h) throw UnknownHeadingError("no manual entry for heading " + heading.digits());
  auto tokens = tokenize(description);
  if (tokens.empty()) throw EmptyDescriptionError("description is empty");
  KbNeighborhood neighborhood;
  if (!kb.empty()) neighborhood = kb_topk_cases(tokens, kb, model, config.k_case);
  auto scored = score_heading(tokens, *h, model, idf, neighborhood, config);
  if (scored.size() > config.n_sentences) scored.resize(config.n_sentences);
  return scored;
}

}  // namespace hsassist

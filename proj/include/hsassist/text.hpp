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
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hsassist/corpus.hpp"
#include "hsassist/errors.hpp"
#include "hsassist/tokenizer.hpp"

namespace hsassist {

using TokenId = std::uint32_t;

/// Dense token index. Ids follow descending corpus frequency, then
/// lexicographic order of the token.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// `tokens` in id order, with their corpus counts.
  Vocabulary(std::vector<Token> tokens, std::vector<std::uint64_t> counts, std::uint64_t min_count)
      : tokens_(std::move(tokens)), counts_(std::move(counts)), min_count_(min_count) {
    if (tokens_.size() != counts_.size()) throw ValidationError("vocabulary token/count size mismatch");
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i)
      if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
        throw ValidationError("duplicate vocabulary token '" + tokens_[i] + "'");
  }

  std::optional<TokenId> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view token) const { return find(token).has_value(); }
  const Token& token(TokenId id) const { return tokens_.at(id); }
  std::uint64_t count(TokenId id) const { return counts_.at(id); }
  std::size_t size() const noexcept { return tokens_.size(); }
  std::uint64_t min_count() const noexcept { return min_count_; }
  const std::vector<Token>& tokens() const noexcept { return tokens_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.counts_ == b.counts_ && a.min_count_ == b.min_count_;
  }

 private:
  std::vector<Token> tokens_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t min_count_ = 1;
  std::unordered_map<Token, TokenId> index_;
};

inline Vocabulary build_vocabulary(const std::vector<std::string>& documents, std::uint64_t min_count) {
  if (documents.empty()) throw EmptyCorpusError("cannot build a vocabulary from an empty corpus");
  std::unordered_map<Token, std::uint64_t> freq;
  for (const auto& doc : documents)
    for (auto& t : tokenize(doc)) ++freq[std::move(t)];
  std::vector<std::pair<Token, std::uint64_t>> kept;
  for (auto& [t, n] : freq)
    if (n >= min_count) kept.emplace_back(t, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<Token> tokens;
  std::vector<std::uint64_t> counts;
  for (auto& [t, n] : kept) {
    tokens.push_back(std::move(t));
    counts.push_back(n);
  }
  return Vocabulary(std::move(tokens), std::move(counts), min_count);
}

inline std::vector<std::string> descriptions(const CaseCollection& cases) {
  std::vector<std::string> docs;
  docs.reserve(cases.size());
  for (const auto& c : cases) docs.push_back(c.description);
  return docs;
}

inline Vocabulary build_vocabulary(const CaseCollection& corpus, std::uint64_t min_count) {
  return build_vocabulary(descriptions(corpus), min_count);
}

/// Smoothed inverse document frequency, ln((1 + N) / (1 + df)) + 1, over the
/// tokens of a vocabulary. Out-of-vocabulary tokens get the largest stored
/// weight.
struct IdfTable {
  std::vector<double> weights;  // indexed by TokenId
  std::uint64_t n_docs = 0;
  double oov_weight = 1.0;

  double weight(std::optional<TokenId> id) const { return id ? weights.at(*id) : oov_weight; }

  friend bool operator==(const IdfTable&, const IdfTable&) = default;
};

inline double smoothed_idf(std::uint64_t n_docs, std::uint64_t df) {
  return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
}

inline IdfTable compute_idf(const std::vector<std::string>& documents, const Vocabulary& vocab) {
  if (documents.empty()) throw EmptyCorpusError("cannot compute IDF over an empty corpus");
  std::vector<std::uint64_t> df(vocab.size(), 0);
  for (const auto& doc : documents) {
    std::unordered_set<TokenId> seen;
    for (const auto& t : tokenize(doc))
      if (auto id = vocab.find(t); id && seen.insert(*id).second) ++df[*id];
  }
  IdfTable idf;
  idf.n_docs = documents.size();
  idf.weights.resize(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) idf.weights[i] = smoothed_idf(idf.n_docs, df[i]);
  idf.oov_weight = idf.weights.empty() ? smoothed_idf(idf.n_docs, 0)
                                       : *std::max_element(idf.weights.begin(), idf.weights.end());
  return idf;
}

inline IdfTable compute_idf(const CaseCollection& corpus, const Vocabulary& vocab) {
  return compute_idf(descriptions(corpus), vocab);
}

}  // namespace hsassist

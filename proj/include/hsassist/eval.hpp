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

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsassist/corpus.hpp"
#include "hsassist/encoder.hpp"
#include "hsassist/retrieval.hpp"

namespace hsassist {

/// Fraction of cases whose gold label is among the first `k` ranked labels.
/// At heading level the gold subheading is reduced to its heading; ranked
/// lists are expected at the requested level.
inline double topk_accuracy(const std::vector<std::vector<HsCode>>& predictions, const std::vector<HsCode>& gold,
                            std::size_t k, HsLevel level) {
  if (predictions.size() != gold.size())
    throw LengthMismatchError(std::to_string(predictions.size()) + " predictions for " +
                              std::to_string(gold.size()) + " gold labels");
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const HsCode target = gold[i].truncate(level);
    const auto& ranked = predictions[i];
    const std::size_t n = std::min(k, ranked.size());
    for (std::size_t r = 0; r < n; ++r) {
      if (ranked[r] == target) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

struct RecallPrecision {
  double recall = 0.0;
  double precision = 0.0;
  /// False when nothing was retrieved; precision is then reported as 0.
  bool precision_defined = true;
};

inline RecallPrecision retrieval_recall_precision(const std::vector<std::string>& retrieved,
                                                  const std::vector<std::string>& expert) {
  std::set<std::string> gold(expert.begin(), expert.end());
  if (gold.empty()) throw EmptyExpertSetError("expert evidence set is empty");
  std::set<std::string> got(retrieved.begin(), retrieved.end());
  std::size_t shared = 0;
  for (const auto& s : got) shared += gold.count(s);
  RecallPrecision rp;
  rp.recall = static_cast<double>(shared) / static_cast<double>(gold.size());
  if (got.empty()) {
    rp.precision_defined = false;
  } else {
    rp.precision = static_cast<double>(shared) / static_cast<double>(got.size());
  }
  return rp;
}

/// Ordinary least-squares slope of accuracy against log10(frequency).
inline double frequency_accuracy_slope(const std::vector<double>& accuracy, const std::vector<double>& frequency) {
  if (accuracy.size() != frequency.size()) throw LengthMismatchError("accuracy and frequency differ in length");
  if (accuracy.size() < 2) throw DegenerateInputError("need at least two headings");
  const double n = static_cast<double>(accuracy.size());
  double mx = 0.0;
  std::vector<double> x(accuracy.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(frequency[i] > 0.0)) throw DegenerateInputError("frequencies must be positive");
    x[i] = std::log10(frequency[i]);
    mx += x[i];
  }
  mx /= n;
  // y is shifted by its first value rather than its mean; the slope is the
  // same and constant accuracy gives exactly 0
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (accuracy[i] - accuracy[0]);
  }
  if (sxx == 0.0) throw DegenerateInputError("all frequencies are equal");
  return sxy / sxx;
}

inline double frequency_accuracy_slope(const std::map<HsCode, double>& accuracy,
                                       const std::map<HsCode, std::size_t>& frequency) {
  std::vector<double> acc, freq;
  for (const auto& [heading, a] : accuracy) {
    auto it = frequency.find(heading);
    if (it == frequency.end() || it->second == 0) continue;
    acc.push_back(a);
    freq.push_back(static_cast<double>(it->second));
  }
  return frequency_accuracy_slope(acc, freq);
}

// ---------------------------------------------------------------------------
// Evaluation harness

enum class CaseGroup { general, contentious };

inline CaseGroup group_of(Origin origin) {
  return is_contentious(origin) ? CaseGroup::contentious : CaseGroup::general;
}

inline std::string_view to_string(CaseGroup g) { return g == CaseGroup::general ? "general" : "contentious"; }

inline std::string level_name(HsLevel level) { return level == HsLevel::heading ? "HS4" : "HS6"; }

/// accuracy[level name][k]
using TopKGrid = std::map<std::string, std::map<std::size_t, double>>;

struct GroupAccuracy {
  std::size_t count = 0;
  TopKGrid topk;
};

struct EvalResult {
  std::vector<std::size_t> ks{1, 3, 5};
  std::size_t n_test = 0;
  TopKGrid topk;                                   // whole test set
  std::map<std::string, GroupAccuracy> groups;     // only groups present in the test set
  std::map<std::string, RecallPrecision> retrieval;  // case_id -> metrics
  double mean_recall = 0.0;
  double mean_precision = 0.0;
  std::map<HsCode, double> heading_accuracy;  // heading-level top-1 per gold heading
  std::optional<double> freq_slope;
};

struct EvalOptions {
  std::vector<std::size_t> ks{1, 3, 5};
  RetrievalConfig retrieval;
};

namespace detail {

struct RankedCase {
  std::vector<HsCode> headings;
  std::vector<HsCode> subheadings;
  HsCode gold;
};

inline TopKGrid grid(const std::vector<const RankedCase*>& cases, const std::vector<std::size_t>& ks) {
  std::vector<std::vector<HsCode>> heads, subs;
  std::vector<HsCode> gold;
  for (const auto* c : cases) {
    heads.push_back(c->headings);
    subs.push_back(c->subheadings);
    gold.push_back(c->gold);
  }
  TopKGrid g;
  for (std::size_t k : ks) {
    g["HS4"][k] = topk_accuracy(heads, gold, k, HsLevel::heading);
    g["HS6"][k] = topk_accuracy(subs, gold, k, HsLevel::subheading);
  }
  return g;
}

inline std::vector<HsCode> codes(const Prediction& p) {
  std::vector<HsCode> out;
  out.reserve(p.ranked.size());
  for (const auto& r : p.ranked) out.push_back(r.code);
  return out;
}

inline detail::RankedCase rank_case(const ModelArtifact& model, const DecisionCase& c) {
  auto tokens = tokenize(c.description);
  if (tokens.empty()) tokens.push_back("");  // scored as all-OOV
  return {codes(predict(model, tokens, HsLevel::heading)), codes(predict(model, tokens, HsLevel::subheading)),
          c.label};
}

}  // namespace detail

/// Top-k grid over the test cases of one origin group.
inline GroupAccuracy accuracy_by_group(const ModelArtifact& model, const CaseCollection& test, CaseGroup group,
                                       const std::vector<std::size_t>& ks = {1, 3, 5}) {
  std::vector<detail::RankedCase> ranked;
  for (const auto& c : test)
    if (group_of(c.origin) == group) ranked.push_back(detail::rank_case(model, c));
  if (ranked.empty()) throw EmptyGroupError("no " + std::string(to_string(group)) + " cases in the test set");
  std::vector<const detail::RankedCase*> members;
  for (const auto& r : ranked) members.push_back(&r);
  return {members.size(), detail::grid(members, ks)};
}

/// Evaluates a trained model on `test`. Heading frequencies come from
/// `train`. Test cases that also appear in the knowledge base are scored for
/// evidence retrieval against their expert evidence, with their own KB entry
/// excluded from the neighbourhood.
inline EvalResult evaluate(const ModelArtifact& model, const Manual& manual, const KnowledgeBase& kb,
                           const CaseCollection& train, const CaseCollection& test, const EvalOptions& options = {}) {
  EvalResult result;
  result.ks = options.ks;
  result.n_test = test.size();

  std::vector<detail::RankedCase> ranked;
  ranked.reserve(test.size());
  for (const auto& c : test) ranked.push_back(detail::rank_case(model, c));

  std::vector<const detail::RankedCase*> all;
  std::map<CaseGroup, std::vector<const detail::RankedCase*>> by_group;
  std::map<HsCode, std::pair<std::size_t, std::size_t>> per_heading;  // hits, total
  for (std::size_t i = 0; i < test.size(); ++i) {
    all.push_back(&ranked[i]);
    by_group[group_of(test[i].origin)].push_back(&ranked[i]);
    auto& [hits, total] = per_heading[test[i].label.heading()];
    ++total;
    hits += !ranked[i].headings.empty() && ranked[i].headings.front() == test[i].label.heading();
  }
  result.topk = detail::grid(all, result.ks);
  for (const auto& [group, members] : by_group)
    result.groups[std::string(to_string(group))] = {members.size(), detail::grid(members, result.ks)};

  for (const auto& [heading, ht] : per_heading)
    result.heading_accuracy[heading] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
  try {
    result.freq_slope = frequency_accuracy_slope(result.heading_accuracy, heading_frequency(train));
  } catch (const DegenerateInputError&) {
    result.freq_slope.reset();
  } catch (const LengthMismatchError&) {
    result.freq_slope.reset();
  }

  if (!kb.empty()) {
    std::unordered_map<std::string, const KnowledgeBaseEntry*> by_id;
    for (const auto& e : kb.entries) by_id.emplace(e.case_id, &e);
    KbIndex index(model, kb);
    RetrievalConfig config = options.retrieval;
    config.validate();
    double recall_sum = 0.0, precision_sum = 0.0;
    for (const auto& c : test) {
      auto it = by_id.find(c.id);
      if (it == by_id.end()) continue;
      const auto* heading = manual.find(c.label.heading());
      if (!heading) continue;
      auto tokens = tokenize(c.description);
      if (tokens.empty()) continue;
      auto enc = encode(model, tokens);
      KbNeighborhood neighborhood;
      if (kb.size() > 1) neighborhood = index.topk(enc.embedding, config.k_case, c.id);
      auto scored = score_heading(tokens, *heading, model, model.idf, neighborhood, config);
      if (scored.size() > config.n_sentences) scored.resize(config.n_sentences);
      std::vector<std::string> retrieved, expert(it->second->evidence.begin(), it->second->evidence.end());
      for (const auto& s : scored) retrieved.push_back(s.sid);
      auto rp = retrieval_recall_precision(retrieved, expert);
      recall_sum += rp.recall;
      precision_sum += rp.precision;
      result.retrieval[c.id] = rp;
    }
    if (!result.retrieval.empty()) {
      result.mean_recall = recall_sum / static_cast<double>(result.retrieval.size());
      result.mean_precision = precision_sum / static_cast<double>(result.retrieval.size());
    }
  }
  return result;
}

inline nlohmann::json to_json(const TopKGrid& grid) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [level, row] : grid)
    for (const auto& [k, acc] : row) j[level]["top" + std::to_string(k)] = acc;
  return j;
}

inline nlohmann::json to_json(const EvalResult& r) {
  nlohmann::json j;
  j["n_test"] = r.n_test;
  j["topk"] = to_json(r.topk);
  j["groups"] = nlohmann::json::object();
  for (const auto& [name, g] : r.groups) j["groups"][name] = {{"count", g.count}, {"topk", to_json(g.topk)}};
  j["retrieval"] = nlohmann::json::object();
  for (const auto& [id, rp] : r.retrieval)
    j["retrieval"][id] = {{"recall", rp.recall}, {"precision", rp.precision}, {"precision_defined", rp.precision_defined}};
  j["mean_recall"] = r.mean_recall;
  j["mean_precision"] = r.mean_precision;
  j["heading_accuracy"] = nlohmann::json::object();
  for (const auto& [h, a] : r.heading_accuracy) j["heading_accuracy"][h.digits()] = a;
  j["freq_slope"] = r.freq_slope ? nlohmann::json(*r.freq_slope) : nlohmann::json(nullptr);
  return j;
}

/// Plain-text grid: one row per level, one column per k.
inline std::string format_grid(const TopKGrid& grid, const std::vector<std::size_t>& ks) {
  std::string out = "level ";
  char buf[64];
  for (std::size_t k : ks) {
    std::snprintf(buf, sizeof buf, "  top-%-3zu", k);
    out += buf;
  }
  out += "\n";
  for (const char* level : {"HS4", "HS6"}) {
    auto it = grid.find(level);
    if (it == grid.end()) continue;
    out += std::string(level) + "   ";
    for (std::size_t k : ks) {
      auto cell = it->second.find(k);
      std::snprintf(buf, sizeof buf, "  %7.4f", cell == it->second.end() ? 0.0 : cell->second);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

inline std::string format_eval(const EvalResult& r) {
  std::string out = "test cases: " + std::to_string(r.n_test) + "\n\n" + format_grid(r.topk, r.ks);
  for (const auto& [name, g] : r.groups)
    out += "\n" + name + " (" + std::to_string(g.count) + " cases)\n" + format_grid(g.topk, r.ks);
  char buf[128];
  if (!r.retrieval.empty()) {
    std::snprintf(buf, sizeof buf, "\nevidence retrieval over %zu cases: recall %.4f, precision %.4f\n",
                  r.retrieval.size(), r.mean_recall, r.mean_precision);
    out += buf;
  }
  if (r.freq_slope) {
    std::snprintf(buf, sizeof buf, "frequency-accuracy slope (per log10 count): %.4f\n", *r.freq_slope);
    out += buf;
  }
  return out;
}

}  // namespace hsassist

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

// Keyword-separable synthetic corpora for desk-scale runs of the whole
// pipeline. Every subheading owns a disjoint set of pseudo-words; every
// heading owns a few more. Case descriptions mix the label's keywords with
// shared noise words, manual sentences restate the keywords, and contentious
// cases cite the keyword-bearing sentences of their heading.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsassist/corpus.hpp"
#include "hsassist/encoder.hpp"

namespace hsassist {

struct SyntheticSpec {
  std::uint64_t seed = 7;
  std::size_t n_headings = 6;
  std::size_t n_subheadings_per_heading = 5;
  std::size_t n_train = 600;
  std::size_t n_val = 100;
  std::size_t n_test = 100;
  std::size_t keywords_per_class = 4;
  std::size_t noise_tokens_per_case = 6;

  void validate() const {
    if (n_headings < 1 || n_subheadings_per_heading < 1 || n_train < 1 || n_val < 1 || n_test < 1 ||
        keywords_per_class < 1 || noise_tokens_per_case < 1)
      throw ValidationError("synthetic spec counts must all be >= 1");
    if (n_headings > 16 * 90) throw ValidationError("at most 1440 synthetic headings");
    if (n_subheadings_per_heading > 99) throw ValidationError("at most 99 subheadings per heading");
  }
};

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  auto get = [&](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end()) field = it->get<std::decay_t<decltype(field)>>();
  };
  get("seed", s.seed);
  get("n_headings", s.n_headings);
  get("n_subheadings_per_heading", s.n_subheadings_per_heading);
  get("n_train", s.n_train);
  get("n_val", s.n_val);
  get("n_test", s.n_test);
  get("keywords_per_class", s.keywords_per_class);
  get("noise_tokens_per_case", s.noise_tokens_per_case);
  s.validate();
  return s;
}

struct SyntheticCorpus {
  CaseCollection cases;  // train, then val, then test in date order
  Manual manual;
  KnowledgeBase kb;
  std::map<HsCode, std::vector<std::string>> keywords;  // per subheading
};

namespace detail {

/// Distinct pronounceable pseudo-word for every index.
inline std::string pseudo_word(std::size_t index) {
  static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                            "s", "t", "v", "z", "ch", "sh", "tr", "pl", "gr", "st"};
  static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u"};
  // base-100 digits, least significant first, at least two syllables
  std::string w;
  std::size_t n = index;
  for (int emitted = 0; emitted < 2 || n > 0; ++emitted) {
    std::size_t syllable = n % 100;
    w += kOnsets[syllable / 5];
    w += kVowels[syllable % 5];
    n /= 100;
  }
  return w;
}

inline std::string join(const std::vector<std::string>& words, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

}  // namespace detail

inline SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  std::size_t next_word = 0;
  auto fresh = [&] { return detail::pseudo_word(next_word++); };

  SyntheticCorpus out;
  const std::size_t per_heading_kw = std::max<std::size_t>(2, spec.keywords_per_class / 2);
  const std::size_t noise_pool = std::max<std::size_t>(20, 4 * spec.noise_tokens_per_case);
  std::vector<std::string> noise, filler;
  for (std::size_t i = 0; i < noise_pool; ++i) noise.push_back(fresh());
  for (std::size_t i = 0; i < 24; ++i) filler.push_back(fresh());

  std::vector<HsCode> headings;
  std::map<HsCode, std::vector<std::string>> heading_kw;
  std::vector<HsCode> labels;
  for (std::size_t h = 0; h < spec.n_headings; ++h) {
    char digits[32];
    std::snprintf(digits, sizeof digits, "%02zu%02zu", 84 + h / 90, 10 + h % 90);
    auto heading = HsCode::parse(digits, HsLevel::heading);
    headings.push_back(heading);
    for (std::size_t i = 0; i < per_heading_kw; ++i) heading_kw[heading].push_back(fresh());
    for (std::size_t s = 0; s < spec.n_subheadings_per_heading; ++s) {
      std::size_t suffix = spec.n_subheadings_per_heading <= 9 ? 10 * (s + 1) : s + 1;
      const std::string sub = std::string(digits) + char('0' + suffix / 10) + char('0' + suffix % 10);
      auto code = HsCode::parse(sub, HsLevel::subheading);
      labels.push_back(code);
      for (std::size_t i = 0; i < spec.keywords_per_class; ++i) out.keywords[code].push_back(fresh());
    }
  }

  // Manual: heading overview, one sentence per subheading, filler.
  std::map<HsCode, std::string> subheading_sid;
  for (const auto& heading : headings) {
    HeadingManual m;
    m.heading = heading;
    const auto& hk = heading_kw[heading];
    m.title = "Goods of the " + hk.front() + " kind";
    std::vector<std::string> texts;
    texts.push_back("This heading covers " + detail::join(hk, ", ") + " articles and their parts.");
    for (std::size_t s = 0; s < filler.size() / 8; ++s)
      texts.push_back(detail::join({filler[pick(filler.size())], filler[pick(filler.size())],
                                    filler[pick(filler.size())], filler[pick(filler.size())]}) + ".");
    for (const auto& code : labels) {
      if (code.heading() != heading) continue;
      subheading_sid[code] = make_sid(heading, texts.size());
      texts.push_back("Subheading " + code.digits() + " includes goods described as " +
                      detail::join(out.keywords[code], ", ") + ".");
      m.subheading_oneliners[code] = detail::join(out.keywords[code], " ");
    }
    texts.push_back("The heading excludes " + noise[pick(noise.size())] + " and " + noise[pick(noise.size())] +
                    " unless combined with " + hk.back() + ".");
    texts.push_back(detail::join({filler[pick(filler.size())], filler[pick(filler.size())],
                                  filler[pick(filler.size())]}) + ".");
    for (std::size_t i = 0; i < texts.size(); ++i) m.sentences.push_back({make_sid(heading, i), texts[i]});
    out.manual.add(std::move(m));
  }

  // Cases in date order: train, then validation, then test.
  const std::size_t total = spec.n_train + spec.n_val + spec.n_test;
  const auto start = std::chrono::sys_days{std::chrono::year{2015} / 1 / 1};
  std::vector<DecisionCase> cases;
  cases.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const auto& label = labels[pick(labels.size())];
    std::vector<std::string> words = out.keywords[label];
    const auto& hk = heading_kw[label.heading()];
    words.push_back(hk[pick(hk.size())]);
    for (std::size_t n = 0; n < spec.noise_tokens_per_case; ++n) words.push_back(noise[pick(noise.size())]);
    for (std::size_t j = words.size(); j > 1; --j) std::swap(words[j - 1], words[pick(j)]);

    DecisionCase c;
    char id[32];
    std::snprintf(id, sizeof id, "C%06zu", i);
    c.id = id;
    c.date = std::chrono::year_month_day{start + std::chrono::days{static_cast<int>(i)}};
    c.description = detail::join(words);
    c.label = label;
    auto roll = pick(100);
    c.origin = roll < 8 ? Origin::council : roll < 12 ? Origin::committee : roll < 42 ? Origin::international
                                                                                      : Origin::general;
    if (is_contentious(c.origin)) {
      KnowledgeBaseEntry e;
      e.case_id = c.id;
      e.description = c.description;
      e.label = label;
      e.evidence = {make_sid(label.heading(), 0), subheading_sid[label]};
      out.kb.entries.push_back(std::move(e));
    }
    cases.push_back(std::move(c));
  }
  out.cases = CaseCollection(std::move(cases));
  return out;
}

/// Writes cases.jsonl, manual.jsonl and kb.jsonl into `dir`. KB evidence
/// alternates between sid references and verbatim quotes so that both
/// resolution paths are exercised on load.
inline void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("cases.jsonl");
    write_cases(f, corpus.cases);
  }
  {
    auto f = open("manual.jsonl");
    write_manual(f, corpus.manual);
  }
  auto f = open("kb.jsonl");
  std::size_t n = 0;
  for (const auto& e : corpus.kb.entries) {
    nlohmann::ordered_json r;
    r["case_id"] = e.case_id;
    r["description"] = e.description;
    r["hs6"] = e.label.digits();
    auto& ev = r["evidence"] = nlohmann::ordered_json::array();
    for (const auto& sid : e.evidence) {
      if (n++ % 2 == 0) {
        ev.push_back({{"sid", sid}});
      } else {
        ev.push_back({{"quote", corpus.manual.find_sentence(sid)->text}});
      }
    }
    f << r.dump() << '\n';
  }
}

}  // namespace hsassist

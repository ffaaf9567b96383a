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
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsassist/errors.hpp"
#include "hsassist/hs_code.hpp"
#include "hsassist/tokenizer.hpp"

namespace hsassist {

// ---------------------------------------------------------------------------
// Decision cases

enum class Origin { general, council, committee, international };

inline std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::general: return "general";
    case Origin::council: return "council";
    case Origin::committee: return "committee";
    case Origin::international: return "international";
  }
  return "general";
}

inline std::optional<Origin> parse_origin(std::string_view s) {
  if (s == "general") return Origin::general;
  if (s == "council") return Origin::council;
  if (s == "committee") return Origin::committee;
  if (s == "international") return Origin::international;
  return std::nullopt;
}

/// Council and committee decisions are the escalated (contentious) ones.
inline bool is_contentious(Origin origin) {
  return origin == Origin::council || origin == Origin::committee;
}

using Date = std::chrono::year_month_day;

inline std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [&](std::size_t off, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(s.data() + off, s.data() + off + len, out);
    return ec == std::errc() && p == s.data() + off + len;
  };
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) return std::nullopt;
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

inline std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

struct DecisionCase {
  std::string id;
  Date date;
  std::string description;
  HsCode label;  // subheading
  Origin origin = Origin::general;

  friend bool operator==(const DecisionCase&, const DecisionCase&) = default;
};

/// Cases ordered by (date, id) ascending.
class CaseCollection {
 public:
  CaseCollection() = default;
  explicit CaseCollection(std::vector<DecisionCase> cases) : cases_(std::move(cases)) {
    std::sort(cases_.begin(), cases_.end(), [](const DecisionCase& a, const DecisionCase& b) {
      if (a.date != b.date) return a.date < b.date;
      return a.id < b.id;
    });
  }

  std::size_t size() const noexcept { return cases_.size(); }
  bool empty() const noexcept { return cases_.empty(); }
  const DecisionCase& operator[](std::size_t i) const { return cases_[i]; }
  auto begin() const noexcept { return cases_.begin(); }
  auto end() const noexcept { return cases_.end(); }
  const std::vector<DecisionCase>& cases() const noexcept { return cases_; }

  friend bool operator==(const CaseCollection&, const CaseCollection&) = default;

 private:
  std::vector<DecisionCase> cases_;
};

// ---------------------------------------------------------------------------
// HS manual

/// Sentence ids have the form "HHHH:n" with n the zero-based position of
/// the sentence inside its heading manual.
inline std::string make_sid(const HsCode& heading, std::size_t index) {
  return heading.digits() + ":" + std::to_string(index);
}

struct ParsedSid {
  HsCode heading;
  std::size_t index = 0;
};

inline std::optional<ParsedSid> parse_sid(std::string_view sid) {
  auto colon = sid.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto heading = HsCode::try_parse(sid.substr(0, colon));
  if (!heading || heading->level() != HsLevel::heading) return std::nullopt;
  auto rest = sid.substr(colon + 1);
  std::size_t index = 0;
  auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), index);
  if (rest.empty() || ec != std::errc() || p != rest.data() + rest.size()) return std::nullopt;
  return ParsedSid{*heading, index};
}

struct ManualSentence {
  std::string sid;
  std::string text;

  friend bool operator==(const ManualSentence&, const ManualSentence&) = default;
};

struct HeadingManual {
  HsCode heading;
  std::string title;
  std::vector<ManualSentence> sentences;
  std::map<HsCode, std::string> subheading_oneliners;

  friend bool operator==(const HeadingManual&, const HeadingManual&) = default;
};

class Manual {
 public:
  Manual() = default;

  void add(HeadingManual heading) {
    auto key = heading.heading;
    if (!headings_.emplace(key, std::move(heading)).second)
      throw DuplicateHeadingError("heading " + key.digits() + " defined more than once");
  }

  /// Union of two manuals with disjoint headings.
  void merge(Manual other) {
    for (auto& [code, heading] : other.headings_) add(std::move(heading));
  }

  const HeadingManual* find(const HsCode& heading) const {
    auto it = headings_.find(heading);
    return it == headings_.end() ? nullptr : &it->second;
  }

  const HeadingManual& at(const HsCode& heading) const {
    const auto* h = find(heading);
    if (!h) throw UnknownHeadingError("no manual entry for heading " + heading.digits());
    return *h;
  }

  const ManualSentence* find_sentence(std::string_view sid) const {
    auto parsed = parse_sid(sid);
    if (!parsed) return nullptr;
    const auto* h = find(parsed->heading);
    if (!h || parsed->index >= h->sentences.size()) return nullptr;
    return &h->sentences[parsed->index];
  }

  std::string_view oneliner(const HsCode& subheading) const {
    const auto* h = find(subheading.heading());
    if (!h) return {};
    auto it = h->subheading_oneliners.find(subheading);
    return it == h->subheading_oneliners.end() ? std::string_view{} : std::string_view{it->second};
  }

  const std::map<HsCode, HeadingManual>& headings() const noexcept { return headings_; }
  std::size_t size() const noexcept { return headings_.size(); }
  bool empty() const noexcept { return headings_.empty(); }

  friend bool operator==(const Manual&, const Manual&) = default;

 private:
  std::map<HsCode, HeadingManual> headings_;
};

// ---------------------------------------------------------------------------
// Knowledge base of contentious precedents

struct KnowledgeBaseEntry {
  std::string case_id;
  std::string description;
  HsCode label;
  std::set<std::string> evidence;  // manual sentence ids

  bool cites(std::string_view sid) const { return evidence.find(std::string(sid)) != evidence.end(); }

  friend bool operator==(const KnowledgeBaseEntry&, const KnowledgeBaseEntry&) = default;
};

struct KnowledgeBase {
  std::vector<KnowledgeBaseEntry> entries;
  /// Quotes (or sids) that did not resolve against the manual and were dropped.
  std::size_t dropped_quotes = 0;
  /// Case ids of entries that lost at least one quote.
  std::vector<std::string> flagged;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

// ---------------------------------------------------------------------------
// Loading

namespace detail {

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    if (!record.is_object()) throw ParseError(line_no, "expected a JSON object");
    try {
      fn(record, line_no);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

inline std::string required_string(const nlohmann::json& record, const char* key, std::size_t line_no) {
  auto it = record.find(key);
  if (it == record.end()) throw ParseError(line_no, std::string("missing field '") + key + "'");
  if (!it->is_string()) throw ParseError(line_no, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

inline bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

inline std::set<Token> token_set(std::string_view text) {
  auto tokens = tokenize(text);
  return {tokens.begin(), tokens.end()};
}

}  // namespace detail

/// Token-set Jaccard overlap |A ∩ B| / |A ∪ B|; 0 when both are empty.
inline double token_jaccard(const std::set<Token>& a, const std::set<Token>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& t : a) shared += b.count(t);
  return static_cast<double>(shared) / static_cast<double>(a.size() + b.size() - shared);
}

inline CaseCollection load_cases(std::istream& in) {
  std::vector<DecisionCase> cases;
  std::unordered_set<std::string> seen;
  detail::for_each_json_line(in, [&](const nlohmann::json& r, std::size_t line_no) {
    DecisionCase c;
    c.id = detail::required_string(r, "id", line_no);
    auto date = parse_date(detail::required_string(r, "date", line_no));
    if (!date) throw ParseError(line_no, "date must be YYYY-MM-DD");
    c.date = *date;
    c.description = detail::required_string(r, "description", line_no);
    if (detail::blank(c.description))
      throw ValidationError("line " + std::to_string(line_no) + ": empty description");
    auto hs6 = detail::required_string(r, "hs6", line_no);
    try {
      c.label = HsCode::parse(hs6, HsLevel::subheading);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (auto it = r.find("origin"); it != r.end()) {
      if (!it->is_string()) throw ParseError(line_no, "field 'origin' must be a string");
      auto origin = parse_origin(it->get<std::string>());
      if (!origin)
        throw ValidationError("line " + std::to_string(line_no) + ": unknown origin '" +
                              it->get<std::string>() + "'");
      c.origin = *origin;
    }
    if (!seen.insert(c.id).second)
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate case id '" + c.id + "'");
    cases.push_back(std::move(c));
  });
  return CaseCollection(std::move(cases));
}

inline CaseCollection load_cases(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return load_cases(in);
}

inline void write_cases(std::ostream& out, const CaseCollection& cases) {
  for (const auto& c : cases) {
    nlohmann::ordered_json r;
    r["id"] = c.id;
    r["date"] = format_date(c.date);
    r["description"] = c.description;
    r["hs6"] = c.label.digits();
    r["origin"] = to_string(c.origin);
    out << r.dump() << '\n';
  }
}

inline Manual load_manual(std::istream& in) {
  Manual manual;
  detail::for_each_json_line(in, [&](const nlohmann::json& r, std::size_t line_no) {
    auto where = "line " + std::to_string(line_no) + ": ";
    HeadingManual h;
    auto code = HsCode::try_parse(detail::required_string(r, "heading", line_no));
    if (!code || code->level() != HsLevel::heading)
      throw ValidationError(where + "heading must be 4 digits");
    h.heading = *code;
    if (auto it = r.find("title"); it != r.end()) h.title = it->get<std::string>();
    auto sentences = r.find("sentences");
    if (sentences == r.end() || !sentences->is_array())
      throw ParseError(line_no, "field 'sentences' must be an array");
    for (const auto& s : *sentences) {
      auto text = s.get<std::string>();
      if (detail::blank(text)) throw ValidationError(where + "empty sentence text");
      h.sentences.push_back({make_sid(h.heading, h.sentences.size()), std::move(text)});
    }
    if (h.sentences.empty())
      throw ValidationError(where + "heading " + h.heading.digits() + " has no sentences");
    if (auto subs = r.find("subheadings"); subs != r.end()) {
      if (!subs->is_object()) throw ParseError(line_no, "field 'subheadings' must be an object");
      for (const auto& [key, value] : subs->items()) {
        auto sub = HsCode::try_parse(key);
        if (!sub || sub->level() != HsLevel::subheading || !h.heading.is_prefix_of(*sub))
          throw ValidationError(where + "subheading '" + key + "' does not belong to heading " +
                                h.heading.digits());
        h.subheading_oneliners[*sub] = value.get<std::string>();
      }
    }
    try {
      manual.add(std::move(h));
    } catch (const DuplicateHeadingError& e) {
      throw DuplicateHeadingError(where + e.what());
    }
  });
  return manual;
}

inline Manual load_manual(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return load_manual(in);
}

inline Manual load_manual(const std::vector<std::filesystem::path>& paths) {
  Manual manual;
  for (const auto& p : paths) manual.merge(load_manual(p));
  return manual;
}

inline void write_manual(std::ostream& out, const Manual& manual) {
  for (const auto& [code, h] : manual.headings()) {
    nlohmann::ordered_json r;
    r["heading"] = code.digits();
    r["title"] = h.title;
    auto& sentences = r["sentences"] = nlohmann::ordered_json::array();
    for (const auto& s : h.sentences) sentences.push_back(s.text);
    auto& subs = r["subheadings"] = nlohmann::ordered_json::object();
    for (const auto& [sub, text] : h.subheading_oneliners) subs[sub.digits()] = text;
    out << r.dump() << '\n';
  }
}

/// Resolves raw quotes from "Reasons for Decision" texts to manual sentence
/// ids. Exact match after normalization wins; otherwise the sentence with the
/// highest token-set Jaccard overlap is taken when the overlap is at least
/// `min_overlap`. Candidates in the entry's own heading are preferred on ties.
class QuoteResolver {
 public:
  explicit QuoteResolver(const Manual& manual, double min_overlap = 0.9)
      : min_overlap_(min_overlap) {
    for (const auto& [code, h] : manual.headings()) {
      for (const auto& s : h.sentences) {
        exact_.emplace(normalize_text(s.text), std::vector<std::string>{}).first->second.push_back(s.sid);
        sentences_.push_back({s.sid, code, detail::token_set(s.text)});
      }
    }
  }

  std::optional<std::string> resolve(std::string_view quote, const HsCode& label_heading) const {
    if (auto it = exact_.find(normalize_text(quote)); it != exact_.end()) {
      for (const auto& sid : it->second)
        if (parse_sid(sid)->heading == label_heading) return sid;
      return it->second.front();
    }
    auto tokens = detail::token_set(quote);
    const Indexed* best = nullptr;
    double best_overlap = -1.0;
    for (const auto& s : sentences_) {
      double overlap = token_jaccard(tokens, s.tokens);
      bool better = overlap > best_overlap ||
                    (overlap == best_overlap && best && best->heading != label_heading &&
                     s.heading == label_heading);
      if (better) {
        best = &s;
        best_overlap = overlap;
      }
    }
    if (best && best_overlap >= min_overlap_) return best->sid;
    return std::nullopt;
  }

 private:
  struct Indexed {
    std::string sid;
    HsCode heading;
    std::set<Token> tokens;
  };
  double min_overlap_;
  std::unordered_map<std::string, std::vector<std::string>> exact_;
  std::vector<Indexed> sentences_;
};

inline KnowledgeBase load_knowledge_base(std::istream& in, const Manual& manual) {
  KnowledgeBase kb;
  QuoteResolver resolver(manual);
  std::unordered_set<std::string> seen;
  detail::for_each_json_line(in, [&](const nlohmann::json& r, std::size_t line_no) {
    auto where = "line " + std::to_string(line_no) + ": ";
    KnowledgeBaseEntry e;
    e.case_id = detail::required_string(r, "case_id", line_no);
    e.description = detail::required_string(r, "description", line_no);
    if (detail::blank(e.description)) throw ValidationError(where + "empty description");
    try {
      e.label = HsCode::parse(detail::required_string(r, "hs6", line_no), HsLevel::subheading);
    } catch (const ValidationError& err) {
      throw ValidationError(where + err.what());
    }
    auto evidence = r.find("evidence");
    if (evidence == r.end() || !evidence->is_array())
      throw ParseError(line_no, "field 'evidence' must be an array");
    bool dropped = false;
    for (const auto& item : *evidence) {
      if (!item.is_object()) throw ParseError(line_no, "evidence items must be objects");
      std::optional<std::string> sid;
      if (auto s = item.find("sid"); s != item.end()) {
        auto raw = s->get<std::string>();
        if (manual.find_sentence(raw)) sid = raw;
      } else if (auto q = item.find("quote"); q != item.end()) {
        sid = resolver.resolve(q->get<std::string>(), e.label.heading());
      } else {
        throw ParseError(line_no, "evidence item needs 'sid' or 'quote'");
      }
      if (sid) {
        e.evidence.insert(*sid);
      } else {
        ++kb.dropped_quotes;
        dropped = true;
      }
    }
    if (e.evidence.empty())
      throw EmptyEvidenceError(where + "entry '" + e.case_id + "' resolves to no manual sentence");
    if (!seen.insert(e.case_id).second)
      throw ValidationError(where + "duplicate case_id '" + e.case_id + "'");
    if (dropped) kb.flagged.push_back(e.case_id);
    kb.entries.push_back(std::move(e));
  });
  return kb;
}

inline KnowledgeBase load_knowledge_base(const std::filesystem::path& path, const Manual& manual) {
  auto in = detail::open_input(path);
  return load_knowledge_base(in, manual);
}

/// Writes entries with evidence as sid references.
inline void write_knowledge_base(std::ostream& out, const KnowledgeBase& kb) {
  for (const auto& e : kb.entries) {
    nlohmann::ordered_json r;
    r["case_id"] = e.case_id;
    r["description"] = e.description;
    r["hs6"] = e.label.digits();
    auto& ev = r["evidence"] = nlohmann::ordered_json::array();
    for (const auto& sid : e.evidence) ev.push_back({{"sid", sid}});
    out << r.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splitting and frequency analysis

struct TemporalSplit {
  CaseCollection train;
  CaseCollection val;
  CaseCollection test;
};

/// The newest `n_test` cases form the test set, the next newest `n_val`
/// the validation set, and everything older the training set.
inline TemporalSplit temporal_split(const CaseCollection& cases, std::size_t n_val, std::size_t n_test) {
  if (n_val > cases.size() || n_test > cases.size() - n_val)
    throw SplitError("n_val + n_test = " + std::to_string(n_val + n_test) + " exceeds " +
                     std::to_string(cases.size()) + " cases");
  const auto& all = cases.cases();
  auto train_end = all.begin() + static_cast<std::ptrdiff_t>(all.size() - n_val - n_test);
  auto val_end = train_end + static_cast<std::ptrdiff_t>(n_val);
  return {CaseCollection({all.begin(), train_end}), CaseCollection({train_end, val_end}),
          CaseCollection({val_end, all.end()})};
}

inline std::map<HsCode, std::size_t> heading_frequency(const CaseCollection& cases) {
  std::map<HsCode, std::size_t> counts;
  for (const auto& c : cases) ++counts[c.label.heading()];
  return counts;
}

}  // namespace hsassist

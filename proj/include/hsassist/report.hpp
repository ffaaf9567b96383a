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

#include <chrono>
#include <cstdio>
#include <ctime>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsassist/corpus.hpp"
#include "hsassist/encoder.hpp"
#include "hsassist/retrieval.hpp"

namespace hsassist {

struct ManualLine {
  std::string sid;
  std::string text;
  bool highlighted = false;
  double s_total = 0.0;

  friend bool operator==(const ManualLine&, const ManualLine&) = default;
};

struct HeadingCandidate {
  HsCode heading;
  double probability = 0.0;      // calibrated, summed over subheadings
  double raw_probability = 0.0;  // uncalibrated, summed over subheadings
  std::string title;
  std::vector<ManualLine> full_manual_sentences;  // manual order
  std::vector<ScoredSentence> evidence;           // best first
};

struct SubheadingCandidate {
  HsCode subheading;
  std::string one_liner;
  double raw_prob = 0.0;
  double calibrated_prob = 0.0;
};

struct ReportSettings {
  std::size_t k = 3;
  std::size_t n_sentences = 7;
  double lambda = 0.3;
  std::size_t k_case = 10;
};

/// The officer-facing suggestion document: the entered description, the
/// candidate headings with their full manual text and highlighted evidence,
/// and the candidate subheadings with calibrated confidence.
struct SuggestionReport {
  std::string description;
  std::string generated_at;
  std::string model_version;
  ReportSettings settings;
  std::vector<HeadingCandidate> heading_candidates;
  std::vector<SubheadingCandidate> subheading_candidates;
  bool low_confidence_flag = false;
  std::vector<std::string> warnings;
};

/// Current UTC time as ISO-8601 with second precision.
inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ReportRequest {
  std::string description;
  std::size_t k = 3;
  std::size_t n_sentences = 7;
  RetrievalConfig retrieval;
  /// Stamped into the report verbatim; empty means "now".
  std::string generated_at;
};

/// Builds a report. Predicted headings without a manual entry are skipped
/// with a warning and the next-ranked heading takes their place. `kb_index`
/// may be passed to reuse precomputed KB embeddings.
inline SuggestionReport build_report(const ModelArtifact& model, const Manual& manual, const KnowledgeBase& kb,
                                     const ReportRequest& request, const KbIndex* kb_index = nullptr) {
  if (request.k < 1) throw ValidationError("k must be >= 1");
  RetrievalConfig config = request.retrieval;
  config.n_sentences = request.n_sentences;
  config.validate();

  auto tokens = tokenize(request.description);
  if (tokens.empty()) throw EmptyDescriptionError("description is empty");

  SuggestionReport report;
  report.description = request.description;
  report.generated_at = request.generated_at.empty() ? utc_timestamp() : request.generated_at;
  report.model_version = model.version;
  report.settings = {request.k, request.n_sentences, config.lambda, config.k_case};

  auto headings = predict(model, tokens, HsLevel::heading);
  report.low_confidence_flag = headings.low_confidence;

  KbNeighborhood neighborhood;
  if (!kb.empty()) {
    if (kb_index) {
      neighborhood = kb_index->topk(headings.description_embedding, config.k_case);
    } else {
      neighborhood = KbIndex(model, kb).topk(headings.description_embedding, config.k_case);
    }
  }

  for (const auto& candidate : headings.ranked) {
    if (report.heading_candidates.size() >= request.k) break;
    const auto* h = manual.find(candidate.code);
    if (!h) {
      report.warnings.push_back("heading " + candidate.code.digits() + " has no manual entry; skipped");
      continue;
    }
    auto scored = score_heading(tokens, *h, model, model.idf, neighborhood, config);
    HeadingCandidate block;
    block.heading = candidate.code;
    block.probability = candidate.calibrated_prob;
    block.raw_probability = candidate.raw_prob;
    block.title = h->title;
    std::vector<double> totals(h->sentences.size(), 0.0);
    for (const auto& s : scored) totals[parse_sid(s.sid)->index] = s.s_total;
    if (scored.size() > config.n_sentences) scored.resize(config.n_sentences);
    std::set<std::string> chosen;
    for (const auto& s : scored) chosen.insert(s.sid);
    for (std::size_t i = 0; i < h->sentences.size(); ++i) {
      const auto& s = h->sentences[i];
      block.full_manual_sentences.push_back({s.sid, s.text, chosen.count(s.sid) > 0, totals[i]});
    }
    block.evidence = std::move(scored);
    report.heading_candidates.push_back(std::move(block));
  }

  auto subheadings = predict(model, tokens, HsLevel::subheading);
  for (const auto& r : subheadings.ranked) {
    if (report.subheading_candidates.size() >= request.k) break;
    report.subheading_candidates.push_back(
        {r.code, std::string(manual.oneliner(r.code)), r.raw_prob, r.calibrated_prob});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Canonical JSON

inline nlohmann::json to_json(const SuggestionReport& r) {
  using nlohmann::json;
  json j;
  j["description"] = r.description;
  j["generated_at"] = r.generated_at;
  j["model_version"] = r.model_version;
  j["low_confidence_flag"] = r.low_confidence_flag;
  j["settings"] = {{"k", r.settings.k},
                   {"n_sentences", r.settings.n_sentences},
                   {"lambda", r.settings.lambda},
                   {"k_case", r.settings.k_case}};
  j["warnings"] = r.warnings;
  auto& headings = j["heading_candidates"] = json::array();
  for (const auto& h : r.heading_candidates) {
    json block;
    block["heading"] = h.heading.digits();
    block["probability"] = h.probability;
    block["raw_probability"] = h.raw_probability;
    block["title"] = h.title;
    auto& lines = block["full_manual_sentences"] = json::array();
    for (const auto& l : h.full_manual_sentences)
      lines.push_back({{"sid", l.sid}, {"text", l.text}, {"highlighted", l.highlighted}, {"s_total", l.s_total}});
    auto& evidence = block["evidence"] = json::array();
    for (const auto& s : h.evidence)
      evidence.push_back({{"sid", s.sid}, {"s_text", s.s_text}, {"s_expert", s.s_expert}, {"s_total", s.s_total}});
    headings.push_back(std::move(block));
  }
  auto& subs = j["subheading_candidates"] = json::array();
  for (const auto& s : r.subheading_candidates)
    subs.push_back({{"subheading", s.subheading.digits()},
                    {"one_liner", s.one_liner},
                    {"raw_prob", s.raw_prob},
                    {"calibrated_prob", s.calibrated_prob}});
  return j;
}

inline SuggestionReport report_from_json(const nlohmann::json& j) {
  SuggestionReport r;
  r.description = j.at("description").get<std::string>();
  r.generated_at = j.at("generated_at").get<std::string>();
  r.model_version = j.at("model_version").get<std::string>();
  r.low_confidence_flag = j.at("low_confidence_flag").get<bool>();
  const auto& s = j.at("settings");
  r.settings = {s.at("k").get<std::size_t>(), s.at("n_sentences").get<std::size_t>(), s.at("lambda").get<double>(),
                s.at("k_case").get<std::size_t>()};
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  for (const auto& b : j.at("heading_candidates")) {
    HeadingCandidate h;
    h.heading = HsCode::parse(b.at("heading").get<std::string>(), HsLevel::heading);
    h.probability = b.at("probability").get<double>();
    h.raw_probability = b.at("raw_probability").get<double>();
    h.title = b.at("title").get<std::string>();
    for (const auto& l : b.at("full_manual_sentences"))
      h.full_manual_sentences.push_back({l.at("sid").get<std::string>(), l.at("text").get<std::string>(),
                                         l.at("highlighted").get<bool>(), l.at("s_total").get<double>()});
    for (const auto& e : b.at("evidence"))
      h.evidence.push_back({e.at("sid").get<std::string>(), e.at("s_text").get<double>(),
                            e.at("s_expert").get<double>(), e.at("s_total").get<double>()});
    r.heading_candidates.push_back(std::move(h));
  }
  for (const auto& c : j.at("subheading_candidates"))
    r.subheading_candidates.push_back({HsCode::parse(c.at("subheading").get<std::string>(), HsLevel::subheading),
                                       c.at("one_liner").get<std::string>(), c.at("raw_prob").get<double>(),
                                       c.at("calibrated_prob").get<double>()});
  return r;
}

// ---------------------------------------------------------------------------
// Rendering

enum class ReportFormat { json, html };

inline std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string format_percent(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * p);
  return buf;
}

namespace detail {

inline std::string render_html(const SuggestionReport& r) {
  std::string o;
  o += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  o += "<title>HS classification suggestion</title>\n<style>\n";
  o += "body{font-family:sans-serif;max-width:60em;margin:auto}\n";
  o += ".evidence{color:#c00000}\n";
  o += ".low-confidence-banner{background:#fff3cd;border:1px solid #c69500;padding:.5em}\n";
  o += ".confidence-bar{display:inline-block;height:.8em;background:#4a7bd0}\n";
  o += "</style>\n</head>\n<body>\n";
  if (r.low_confidence_flag)
    o += "<div class=\"low-confidence-banner\" role=\"alert\">Low confidence: none of the description's words are "
         "known to the model. Treat these suggestions with caution.</div>\n";
  o += "<header><p class=\"meta\">Model " + html_escape(r.model_version) + ", generated " +
       html_escape(r.generated_at) + "</p></header>\n";
  o += "<section class=\"description\">\n<h2>1. Item description</h2>\n<p>" + html_escape(r.description) +
       "</p>\n</section>\n";

  o += "<section class=\"headings\">\n<h2>2. Candidate headings</h2>\n";
  for (const auto& h : r.heading_candidates) {
    o += "<article class=\"heading\" data-heading=\"" + h.heading.digits() + "\">\n";
    o += "<h3>" + h.heading.digits() + " " + html_escape(h.title) + "</h3>\n";
    o += "<p class=\"confidence\">Confidence " + format_percent(h.probability) + "</p>\n";
    o += "<div class=\"manual\">\n";
    for (const auto& l : h.full_manual_sentences) {
      if (l.highlighted) {
        o += "<span class=\"evidence\" data-sid=\"" + html_escape(l.sid) + "\">" + html_escape(l.text) + "</span>\n";
      } else {
        o += "<span class=\"sentence\" data-sid=\"" + html_escape(l.sid) + "\">" + html_escape(l.text) + "</span>\n";
      }
    }
    o += "</div>\n</article>\n";
  }
  o += "</section>\n";

  o += "<section class=\"subheadings\">\n<h2>3. Candidate subheadings</h2>\n<table>\n";
  o += "<tr><th>Subheading</th><th>Description</th><th>Confidence</th></tr>\n";
  for (const auto& s : r.subheading_candidates) {
    char width[32];
    std::snprintf(width, sizeof width, "%.1f", 100.0 * s.calibrated_prob);
    o += "<tr data-subheading=\"" + s.subheading.digits() + "\"><td>" + s.subheading.digits() + "</td><td>" +
         html_escape(s.one_liner) + "</td><td><span class=\"confidence-bar\" style=\"width:" + width +
         "px\"></span> " + format_percent(s.calibrated_prob) + "</td></tr>\n";
  }
  o += "</table>\n</section>\n";
  if (!r.warnings.empty()) {
    o += "<section class=\"warnings\">\n<ul>\n";
    for (const auto& w : r.warnings) o += "<li>" + html_escape(w) + "</li>\n";
    o += "</ul>\n</section>\n";
  }
  o += "</body>\n</html>\n";
  return o;
}

}  // namespace detail

/// JSON output is canonical: keys sorted, two-space indent, trailing newline.
inline std::string render(const SuggestionReport& report, ReportFormat format) {
  if (format == ReportFormat::json) return to_json(report).dump(2) + "\n";
  return detail::render_html(report);
}

}  // namespace hsassist

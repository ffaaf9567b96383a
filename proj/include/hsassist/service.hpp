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

// Read-only HTTP front end. Requests are served from an immutable snapshot
// (model + manual + knowledge base); a reload builds a new snapshot off to
// the side and swaps the pointer under a lock, so a request either sees the
// old snapshot or the new one in full.
//
//   POST /api/v1/classify            ClassifyRequest -> ClassifyResponse
//   GET  /api/v1/manual/{heading}
//   GET  /api/v1/model/info
//   GET  /api/v1/health
//   POST /api/v1/admin/reload        header X-Admin-Token

#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

// bursts of concurrent clients overflow the library default of 5
#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#endif
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "hsassist/corpus.hpp"
#include "hsassist/encoder.hpp"
#include "hsassist/model_io.hpp"
#include "hsassist/report.hpp"
#include "hsassist/retrieval.hpp"

namespace hsassist {

/// Everything one request needs, frozen at load time.
struct Snapshot {
  ModelArtifact model;
  Manual manual;
  KnowledgeBase kb;
  RetrievalConfig retrieval;
  std::unique_ptr<KbIndex> kb_index;

  Snapshot(ModelArtifact m, Manual man, KnowledgeBase k, RetrievalConfig r)
      : model(std::move(m)), manual(std::move(man)), kb(std::move(k)), retrieval(r) {
    if (!kb.empty()) kb_index = std::make_unique<KbIndex>(model, kb);
  }
  Snapshot(const Snapshot&) = delete;
  Snapshot& operator=(const Snapshot&) = delete;
};

struct ServiceOptions {
  std::filesystem::path model_path;
  std::filesystem::path manual_path;
  std::filesystem::path kb_path;  // optional
  RetrievalConfig retrieval;
  std::string admin_token;  // empty disables reload
  std::string cors_origin;  // empty disables CORS headers
  std::string bind_addr = "127.0.0.1:8080";

  /// Fills unset fields from HS_ASSIST_* environment variables.
  void apply_environment() {
    auto env = [](const char* name) -> std::string {
      const char* v = std::getenv(name);
      return v ? v : "";
    };
    if (model_path.empty()) model_path = env("HS_ASSIST_MODEL_PATH");
    if (manual_path.empty()) manual_path = env("HS_ASSIST_MANUAL_PATH");
    if (kb_path.empty()) kb_path = env("HS_ASSIST_KB_PATH");
    if (admin_token.empty()) admin_token = env("HS_ASSIST_ADMIN_TOKEN");
    if (cors_origin.empty()) cors_origin = env("HS_ASSIST_CORS_ORIGIN");
    if (auto addr = env("HS_ASSIST_BIND_ADDR"); !addr.empty()) bind_addr = addr;
  }
};

inline std::shared_ptr<const Snapshot> load_snapshot(const ServiceOptions& options) {
  auto model = load_model(options.model_path);
  auto manual = load_manual(options.manual_path);
  KnowledgeBase kb;
  if (!options.kb_path.empty()) kb = load_knowledge_base(options.kb_path, manual);
  return std::make_shared<const Snapshot>(std::move(model), std::move(manual), std::move(kb), options.retrieval);
}

struct HttpResult {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

struct ClassifyRequest {
  std::string description;
  std::size_t k = 3;
  std::size_t n_sentences = 7;
  std::optional<double> lambda;
};

inline constexpr std::size_t kMaxK = 10;
inline constexpr std::size_t kMaxSentences = 50;

class Service {
 public:
  explicit Service(ServiceOptions options = {}) : options_(std::move(options)) {}

  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_;
  }

  void install(std::shared_ptr<const Snapshot> snapshot) {
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(snapshot);
  }

  /// Loads from the configured paths; leaves the current snapshot untouched
  /// on failure.
  void reload() { install(load_snapshot(options_)); }

  const ServiceOptions& options() const noexcept { return options_; }

  HttpResult handle_classify(const std::string& body, ReportFormat format = ReportFormat::json) const {
    const auto started = std::chrono::steady_clock::now();
    auto snap = snapshot();
    if (!snap) return error(503, "NO_MODEL", "no model snapshot is loaded");

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      return error(400, "INVALID_JSON", e.what());
    }
    if (!j.is_object()) return error(400, "INVALID_JSON", "request body must be a JSON object");

    ClassifyRequest req;
    req.lambda = snap->retrieval.lambda;
    if (auto it = j.find("description"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) return error(422, "INVALID_DESCRIPTION", "description must be a string");
      req.description = it->get<std::string>();
    }
    if (tokenize(req.description).empty()) return error(422, "EMPTY_DESCRIPTION", "description is empty");
    if (auto r = read_count(j, "k", 1, kMaxK, req.k); !r)
      return error(422, "K_OUT_OF_RANGE", "k must be an integer in [1, 10]");
    if (auto r = read_count(j, "n_sentences", 1, kMaxSentences, req.n_sentences); !r)
      return error(422, "N_SENTENCES_OUT_OF_RANGE", "n_sentences must be an integer in [1, 50]");
    if (auto it = j.find("lambda"); it != j.end() && !it->is_null()) {
      if (!it->is_number() || !(it->get<double>() >= 0.0) || !std::isfinite(it->get<double>()))
        return error(422, "LAMBDA_OUT_OF_RANGE", "lambda must be a finite number >= 0");
      req.lambda = it->get<double>();
    }

    ReportRequest rr;
    rr.description = req.description;
    rr.k = req.k;
    rr.n_sentences = req.n_sentences;
    rr.retrieval = snap->retrieval;
    rr.retrieval.lambda = *req.lambda;
    SuggestionReport report;
    try {
      report = build_report(snap->model, snap->manual, snap->kb, rr, snap->kb_index.get());
    } catch (const EmptyDescriptionError& e) {
      return error(422, "EMPTY_DESCRIPTION", e.what());
    } catch (const Error& e) {
      return error(500, e.code(), e.what());
    }
    if (format == ReportFormat::html) return {200, render(report, ReportFormat::html), "text/html; charset=utf-8"};

    nlohmann::json out;
    out["report"] = to_json(report);
    out["request"] = {{"description", req.description},
                      {"k", req.k},
                      {"n_sentences", req.n_sentences},
                      {"lambda", *req.lambda}};
    out["latency_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return {200, out.dump()};
  }

  HttpResult handle_manual_get(const std::string& heading) const {
    auto snap = snapshot();
    if (!snap) return error(503, "NO_MODEL", "no model snapshot is loaded");
    auto code = HsCode::try_parse(heading);
    if (!code || code->level() != HsLevel::heading)
      return error(400, "MALFORMED_HEADING", "heading must be exactly 4 digits");
    const auto* h = snap->manual.find(*code);
    if (!h) return error(404, "UNKNOWN_HEADING", "no manual entry for heading " + heading);
    nlohmann::json j;
    j["heading"] = h->heading.digits();
    j["title"] = h->title;
    auto& sentences = j["sentences"] = nlohmann::json::array();
    for (const auto& s : h->sentences) sentences.push_back({{"sid", s.sid}, {"text", s.text}});
    auto& subs = j["subheadings"] = nlohmann::json::object();
    for (const auto& [sub, text] : h->subheading_oneliners) subs[sub.digits()] = text;
    return {200, j.dump()};
  }

  HttpResult handle_model_info() const {
    auto snap = snapshot();
    if (!snap) return error(503, "NO_MODEL", "no model snapshot is loaded");
    const auto& m = snap->model;
    nlohmann::json j = {{"version", m.version},
                        {"labels", m.num_classes()},
                        {"dim", m.dim()},
                        {"vocabulary", m.vocab.size()},
                        {"temperature", m.temperature},
                        {"lambda", snap->retrieval.lambda},
                        {"k_case", snap->retrieval.k_case},
                        {"headings", snap->manual.size()},
                        {"kb_entries", snap->kb.size()}};
    return {200, j.dump()};
  }

  HttpResult handle_health() const {
    auto snap = snapshot();
    if (!snap) return {503, nlohmann::json{{"status", "no_model"}}.dump()};
    return {200, nlohmann::json{{"status", "ok"}, {"model_version", snap->model.version}}.dump()};
  }

  HttpResult handle_reload(const std::string& token) {
    if (options_.admin_token.empty()) return error(403, "RELOAD_DISABLED", "HS_ASSIST_ADMIN_TOKEN is not set");
    if (token != options_.admin_token) return error(401, "UNAUTHORIZED", "bad admin token");
    try {
      reload();
    } catch (const std::exception& e) {
      return error(500, "RELOAD_FAILED", e.what());
    }
    return {200, nlohmann::json{{"status", "reloaded"}, {"model_version", snapshot()->model.version}}.dump()};
  }

  /// Registers all routes (and CORS handling, when configured) on `server`.
  void mount(httplib::Server& server) {
    auto reply = [](httplib::Response& res, const HttpResult& r) {
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Post("/api/v1/classify", [this, reply](const httplib::Request& req, httplib::Response& res) {
      auto format = req.get_param_value("format") == "html" ? ReportFormat::html : ReportFormat::json;
      reply(res, handle_classify(req.body, format));
    });
    server.Get(R"(/api/v1/manual/([^/]*))", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, handle_manual_get(req.matches[1]));
    });
    server.Get("/api/v1/model/info",
               [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, handle_model_info()); });
    server.Get("/api/v1/health",
               [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, handle_health()); });
    server.Post("/api/v1/admin/reload", [this, reply](const httplib::Request& req, httplib::Response& res) {
      reply(res, handle_reload(req.get_header_value("X-Admin-Token")));
    });
    if (!options_.cors_origin.empty()) {
      const std::string origin = options_.cors_origin;
      server.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Vary", "Origin");
      });
      server.Options(R"(/api/v1/.*)", [origin](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, X-Admin-Token");
        res.status = 204;
      });
    }
  }

 private:
  static HttpResult error(int status, const std::string& code, const std::string& message) {
    return {status, nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump()};
  }

  /// Reads an optional integer field; false when present but not an integer
  /// within [lo, hi].
  static bool read_count(const nlohmann::json& j, const char* key, std::size_t lo, std::size_t hi,
                         std::size_t& out) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return true;
    if (!it->is_number_integer()) return false;
    auto v = it->get<std::int64_t>();
    if (v < static_cast<std::int64_t>(lo) || v > static_cast<std::int64_t>(hi)) return false;
    out = static_cast<std::size_t>(v);
    return true;
  }

  ServiceOptions options_;
  mutable std::mutex mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
};

/// Splits "host:port"; a bare port binds to 127.0.0.1.
inline std::pair<std::string, int> parse_bind_addr(const std::string& addr) {
  auto colon = addr.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : addr.substr(0, colon);
  std::string port = colon == std::string::npos ? addr : addr.substr(colon + 1);
  int p = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), p);
  if (ec != std::errc() || ptr != port.data() + port.size() || p < 0 || p > 65535)
    throw ValidationError("bad bind address '" + addr + "'");
  if (host.empty()) host = "0.0.0.0";
  return {host, p};
}

}  // namespace hsassist

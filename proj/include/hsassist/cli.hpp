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

// Operator entry point. Exit codes: 0 success, 1 validation/runtime error
// (one JSON error line on stderr), 2 usage error (usage text on stderr).
// Data goes to stdout only; logs go to stderr.

#pragma once

#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hsassist/corpus.hpp"
#include "hsassist/encoder.hpp"
#include "hsassist/eval.hpp"
#include "hsassist/model_io.hpp"
#include "hsassist/report.hpp"
#include "hsassist/retrieval.hpp"
#include "hsassist/service.hpp"
#include "hsassist/synthetic.hpp"

namespace hsassist {

namespace detail {

/// 0 means "a tenth of the collection".
inline std::size_t resolve_split_count(std::size_t requested, std::size_t total) {
  return requested > 0 ? requested : total / 10;
}

inline void print_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << "error: " << nlohmann::json{{"code", code}, {"message", message}}.dump() << '\n';
}

inline KnowledgeBase load_kb_or_empty(const std::string& path, const Manual& manual) {
  return path.empty() ? KnowledgeBase{} : load_knowledge_base(std::filesystem::path(path), manual);
}

}  // namespace detail

inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"HS code classification assistant with manual evidence retrieval", "hs_assist"};
  app.require_subcommand(1);

  // ingest
  std::string cases_path, manual_path, kb_path;
  auto* ingest = app.add_subcommand("ingest", "Validate case, manual and knowledge-base files");
  ingest->add_option("--cases", cases_path, "Decision cases (JSON lines)");
  ingest->add_option("--manual", manual_path, "HS manual (JSON lines)");
  ingest->add_option("--kb", kb_path, "Knowledge base of contentious cases (JSON lines)")->needs(
      ingest->get_option("--manual"));

  // train
  std::string out_path;
  EncoderConfig enc;
  std::size_t n_val = 0, n_test = 0;
  bool no_calibrate = false;
  auto* train_cmd = app.add_subcommand("train", "Train, calibrate and save a model artifact");
  train_cmd->add_option("--cases", cases_path, "Decision cases (JSON lines)")->required();
  train_cmd->add_option("--manual", manual_path, "HS manual, validated if given");
  train_cmd->add_option("--kb", kb_path, "Knowledge base, validated if given");
  train_cmd->add_option("--out", out_path, "Output model artifact")->required();
  train_cmd->add_option("--dim", enc.dim, "Embedding dimension")->capture_default_str();
  train_cmd->add_option("--epochs", enc.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--lr", enc.learning_rate, "Learning rate")->capture_default_str();
  train_cmd->add_option("--batch-size", enc.batch_size, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--seed", enc.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--min-count", enc.min_count, "Minimum token frequency")->capture_default_str();
  train_cmd->add_option("--n-val", n_val, "Validation cases (newest before test; 0 = 10%)");
  train_cmd->add_option("--n-test", n_test, "Held-out test cases (newest; 0 = 10%)");
  train_cmd->add_flag("--no-calibrate", no_calibrate, "Skip temperature scaling");

  // predict
  std::string model_path, text, format = "json", generated_at;
  std::size_t k = 3, n_sentences = 7;
  RetrievalConfig retrieval;
  auto* predict_cmd = app.add_subcommand("predict", "Build a suggestion report for one description");
  predict_cmd->add_option("--model", model_path, "Model artifact")->required();
  predict_cmd->add_option("--manual", manual_path, "HS manual")->required();
  predict_cmd->add_option("--kb", kb_path, "Knowledge base");
  predict_cmd->add_option("--text", text, "Goods description")->required();
  predict_cmd->add_option("--k", k, "Candidate count")->capture_default_str()->check(CLI::Range(1, 10));
  predict_cmd->add_option("--sentences", n_sentences, "Evidence sentences per heading")
      ->capture_default_str()
      ->check(CLI::Range(1, 50));
  predict_cmd->add_option("--lambda", retrieval.lambda, "Expert score weight")->capture_default_str();
  predict_cmd->add_option("--k-case", retrieval.k_case, "Knowledge-base neighbours")->capture_default_str();
  predict_cmd->add_flag("--clamp-negative", retrieval.clamp_negative_kb_sim, "Ignore negative KB similarities");
  predict_cmd->add_flag("--normalize-text", retrieval.normalize_text_score, "Normalize text score by idf mass");
  predict_cmd->add_option("--format", format, "json or html")->check(CLI::IsMember({"json", "html"}));
  predict_cmd->add_option("--generated-at", generated_at, "Timestamp to stamp into the report (default: now)");

  // evaluate
  std::vector<std::size_t> ks{1, 3, 5};
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a model on the held-out test split");
  eval_cmd->add_option("--model", model_path, "Model artifact")->required();
  eval_cmd->add_option("--cases", cases_path, "Decision cases (JSON lines)")->required();
  eval_cmd->add_option("--manual", manual_path, "HS manual")->required();
  eval_cmd->add_option("--kb", kb_path, "Knowledge base");
  eval_cmd->add_option("--n-val", n_val, "Validation cases (0 = 10%)");
  eval_cmd->add_option("--n-test", n_test, "Test cases (0 = 10%)");
  eval_cmd->add_option("--ks", ks, "k values for top-k accuracy")->capture_default_str();
  eval_cmd->add_option("--sentences", n_sentences, "Evidence sentences per heading")->capture_default_str();
  eval_cmd->add_option("--lambda", retrieval.lambda, "Expert score weight")->capture_default_str();
  eval_cmd->add_option("--k-case", retrieval.k_case, "Knowledge-base neighbours")->capture_default_str();
  std::string eval_format = "table";
  eval_cmd->add_option("--format", eval_format, "table or json")->check(CLI::IsMember({"table", "json"}));

  // serve
  ServiceOptions service_options;
  std::string bind;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service (flags override HS_ASSIST_* env)");
  serve_cmd->add_option("--model", model_path, "Model artifact (env HS_ASSIST_MODEL_PATH)");
  serve_cmd->add_option("--manual", manual_path, "HS manual (env HS_ASSIST_MANUAL_PATH)");
  serve_cmd->add_option("--kb", kb_path, "Knowledge base (env HS_ASSIST_KB_PATH)");
  serve_cmd->add_option("--bind", bind, "host:port (env HS_ASSIST_BIND_ADDR)");
  serve_cmd->add_option("--lambda", retrieval.lambda, "Expert score weight")->capture_default_str();
  serve_cmd->add_option("--k-case", retrieval.k_case, "Knowledge-base neighbours")->capture_default_str();

  // synth
  std::string spec_path, out_dir;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("--spec", spec_path, "Synthetic spec (JSON)")->required();
  synth_cmd->add_option("--out-dir", out_dir, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 2;
  }

  try {
    if (ingest->parsed()) {
      nlohmann::json summary = nlohmann::json::object();
      if (!cases_path.empty()) {
        auto cases = load_cases(std::filesystem::path(cases_path));
        summary["cases"] = cases.size();
        if (!cases.empty()) {
          summary["first_date"] = format_date(cases[0].date);
          summary["last_date"] = format_date(cases[cases.size() - 1].date);
        }
        nlohmann::json freq = nlohmann::json::object();
        for (const auto& [h, n] : heading_frequency(cases)) freq[h.digits()] = n;
        summary["heading_frequency"] = freq;
      }
      if (!manual_path.empty()) {
        auto manual = load_manual(std::filesystem::path(manual_path));
        summary["manual_headings"] = manual.size();
        if (!kb_path.empty()) {
          auto kb = load_knowledge_base(std::filesystem::path(kb_path), manual);
          summary["kb_entries"] = kb.size();
          summary["kb_dropped_quotes"] = kb.dropped_quotes;
          summary["kb_flagged"] = kb.flagged;
        }
      }
      out << summary.dump(2) << '\n';
      return 0;
    }

    if (train_cmd->parsed()) {
      auto cases = load_cases(std::filesystem::path(cases_path));
      if (!manual_path.empty()) {
        auto manual = load_manual(std::filesystem::path(manual_path));
        if (!kb_path.empty()) load_knowledge_base(std::filesystem::path(kb_path), manual);
      }
      auto split = temporal_split(cases, detail::resolve_split_count(n_val, cases.size()),
                                  detail::resolve_split_count(n_test, cases.size()));
      err << "training on " << split.train.size() << " cases (" << split.val.size() << " validation, "
          << split.test.size() << " held out)\n";
      auto result = train_with_history(split.train, split.val, enc);
      auto model = std::move(result.model);
      if (!no_calibrate && !split.val.empty()) model = calibrate_temperature(std::move(model), split.val);
      save_model(std::filesystem::path(out_path), model);
      nlohmann::json summary = {{"model", out_path},
                                {"version", model.version},
                                {"labels", model.num_classes()},
                                {"vocabulary", model.vocab.size()},
                                {"best_epoch", result.best_epoch},
                                {"initial_loss", result.initial_loss},
                                {"temperature", model.temperature}};
      if (!result.history.empty()) {
        summary["final_loss"] = result.history.back().train_loss;
        if (result.best_epoch > 0) summary["best_val_top1"] = result.history[result.best_epoch - 1].val_top1;
      }
      out << summary.dump(2) << '\n';
      return 0;
    }

    if (predict_cmd->parsed()) {
      auto model = load_model(std::filesystem::path(model_path));
      auto manual = load_manual(std::filesystem::path(manual_path));
      auto kb = detail::load_kb_or_empty(kb_path, manual);
      ReportRequest request{text, k, n_sentences, retrieval, generated_at};
      auto report = build_report(model, manual, kb, request);
      for (const auto& w : report.warnings) err << "warning: " << w << '\n';
      out << render(report, format == "html" ? ReportFormat::html : ReportFormat::json);
      return 0;
    }

    if (eval_cmd->parsed()) {
      auto model = load_model(std::filesystem::path(model_path));
      auto cases = load_cases(std::filesystem::path(cases_path));
      auto manual = load_manual(std::filesystem::path(manual_path));
      auto kb = detail::load_kb_or_empty(kb_path, manual);
      auto split = temporal_split(cases, detail::resolve_split_count(n_val, cases.size()),
                                  detail::resolve_split_count(n_test, cases.size()));
      EvalOptions options{ks, retrieval};
      options.retrieval.n_sentences = n_sentences;
      auto result = evaluate(model, manual, kb, split.train, split.test, options);
      if (eval_format == "json") {
        out << to_json(result).dump(2) << '\n';
      } else {
        out << format_eval(result);
      }
      return 0;
    }

    if (serve_cmd->parsed()) {
      service_options.model_path = model_path;
      service_options.manual_path = manual_path;
      service_options.kb_path = kb_path;
      service_options.retrieval = retrieval;
      if (!bind.empty()) service_options.bind_addr = bind;
      service_options.apply_environment();
      if (!bind.empty()) service_options.bind_addr = bind;
      Service service(service_options);
      if (!service_options.model_path.empty()) {
        try {
          service.reload();
          err << "loaded model " << service.snapshot()->model.version << '\n';
        } catch (const std::exception& e) {
          err << "warning: starting without a model: " << e.what() << '\n';
        }
      } else {
        err << "warning: no model path configured; serving 503 until reloaded\n";
      }
      auto [host, port] = parse_bind_addr(service_options.bind_addr);
      httplib::Server server;
      service.mount(server);
      err << "listening on " << host << ":" << port << '\n';
      if (!server.listen(host, port)) {
        detail::print_error(err, "BIND_FAILED", "cannot listen on " + service_options.bind_addr);
        return 1;
      }
      return 0;
    }

    if (synth_cmd->parsed()) {
      std::ifstream in(spec_path);
      if (!in) throw IoError("cannot open " + spec_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(1, e.what());
      }
      SyntheticSpec spec;
      try {
        spec = synthetic_spec_from_json(j);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(e.what());
      }
      auto corpus = generate_synthetic_corpus(spec);
      write_synthetic_corpus(corpus, out_dir);
      out << nlohmann::json{{"out_dir", out_dir},
                            {"cases", corpus.cases.size()},
                            {"headings", corpus.manual.size()},
                            {"kb_entries", corpus.kb.size()},
                            {"n_val", spec.n_val},
                            {"n_test", spec.n_test}}
                 .dump(2)
          << '\n';
      return 0;
    }
  } catch (const Error& e) {
    detail::print_error(err, e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    detail::print_error(err, "INTERNAL", e.what());
    return 1;
  }
  return 2;
}

inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args, out, err);
}

}  // namespace hsassist

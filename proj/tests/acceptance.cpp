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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>

#include "support/gradcheck.hpp"
#include "support/live_service.hpp"
#include "support/oracles.hpp"

namespace {

using namespace hsassist;
namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failure reasons; the first few are kept for the summary line.
struct Check {
  Outcome o;
  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (o.pass) o.detail.clear();
    o.pass = false;
    if (o.detail.size() < 300) o.detail += (o.detail.empty() ? "" : "; ") + what;
  }
  void note(const std::string& s) {
    if (o.pass) o.detail = s;
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

EncoderConfig reference_config() {
  EncoderConfig c;
  c.dim = 64;
  c.epochs = 50;
  return c;
}

// Trained once, shared by the criteria that inspect the reference model.
const testing::TrainedCorpus& reference() {
  static const testing::TrainedCorpus t = testing::trained_synthetic(SyntheticSpec{}, reference_config());
  return t;
}

Outcome synthetic_classification() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  auto t = testing::trained_synthetic(SyntheticSpec{}, reference_config());
  auto result = evaluate(t.model, t.corpus.manual, t.corpus.kb, t.split.train, t.split.test, EvalOptions{});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double top1 = result.topk.at("HS6").at(1), top3 = result.topk.at("HS6").at(3);
  c.require(t.model.num_classes() == 30, "expected 30 classes");
  c.require(result.n_test == 100, "expected 100 test cases");
  c.require(top1 >= 0.90, fmt("top-1 %.3f < 0.90", top1));
  c.require(top3 >= 0.97, fmt("top-3 %.3f < 0.97", top3));
  c.require(secs < 60.0, fmt("run took %.1f s", secs));
  c.note(fmt("top-1 %.3f, top-3 %.3f, %.2f s", top1, top3, secs));
  return c.o;
}

Outcome gradient_check() {
  Check c;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto r = testing::gradient_check(seed);
    worst = std::max(worst, r.max_rel_error);
    c.require(r.n_checked > 0, "no parameters checked");
    c.require(r.max_rel_error < 1e-4, fmt("seed %.0f relative error %.3g", double(seed), r.max_rel_error));
  }
  c.note(fmt("max relative error %.3g over 5 seeds", worst));
  return c.o;
}

Outcome retrieval_oracle() {
  Check c;
  std::mt19937_64 rng(2024);
  std::size_t compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = testing::random_retrieval_instance(rng);
    for (double lambda : {0.0, 0.3, 1.0}) {
      RetrievalConfig cfg;
      cfg.lambda = lambda;
      cfg.k_case = 1 + testing::uniform_index(rng, 12);
      cfg.n_sentences = 1 + testing::uniform_index(rng, 60);
      auto got = retrieve_evidence(inst.description, inst.heading, inst.manual, inst.kb, inst.model, inst.model.idf, cfg);
      auto want = oracle::naive_retrieve(inst.description, inst.heading, inst.manual, inst.kb, inst.model, cfg);
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < got.size(); ++i)
        same = got[i].sid == want[i].sid && std::abs(got[i].s_total - want[i].s_total) <= 1e-10;
      c.require(same, "instance " + std::to_string(trial) + " lambda " + fmt("%.1f", lambda) + " differs");
      ++compared;
    }
  }
  c.note(std::to_string(compared) + " instance/lambda pairs identical in set and order");
  return c.o;
}

Outcome worked_scores() {
  Check c;
  KnowledgeBaseEntry e1, e2;
  e1.case_id = "e1";
  e1.evidence = {"M1", "M2"};
  e2.case_id = "e2";
  e2.evidence = {"M2"};
  KbNeighborhood n;
  n.neighbors = {{&e1, 0.9}, {&e2, 0.5}};
  const double se = expert_score("M2", n);

  auto m = testing::make_model({"a", "b"}, {{1, 0}, {0, 1}}, {"847110"}, {2.0, 1.0});
  RetrievalConfig cfg;
  auto r = relevance_score(tokenize("a b"), ManualSentence{"M2", "a"}, m, m.idf, n, cfg);
  c.require(se == 1.4, fmt("s_e = %.17g", se));
  c.require(r.s_text == 2.0, fmt("s_s = %.17g", r.s_text));
  c.require(r.s_total == 2.42, fmt("s_total = %.17g", r.s_total));
  c.note(fmt("s_e = %.15g, s_total = %.15g (exact double equality)", se, r.s_total));
  return c.o;
}

Outcome calibration() {
  Check c;
  // reference model on its own validation split
  const auto& t = reference();
  auto [val_logits, val_labels] = logits_and_labels(t.model, t.split.val);
  const double t_ref = t.model.temperature;
  c.require(temperature_nll(val_logits, val_labels, t_ref) <= temperature_nll(val_logits, val_labels, 1.0),
            "validation NLL rose");
  c.require(std::abs(t_ref - oracle::grid_temperature(val_logits, val_labels)) <= 1e-2, "reference T off grid optimum");

  // overconfident fixture: label drawn from softmax(z), logits reported as 10 z
  std::mt19937_64 rng(12);
  std::vector<std::vector<double>> logits;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 300; ++i) {
    std::vector<double> z(4);
    for (double& x : z) x = testing::gaussian(rng);
    auto p = softmax(z);
    labels.push_back(std::discrete_distribution<std::size_t>(p.begin(), p.end())(rng));
    for (double& x : z) x *= 10.0;
    logits.push_back(z);
  }
  const double temp = fit_temperature(logits, labels);
  const double before = temperature_nll(logits, labels, 1.0), after = temperature_nll(logits, labels, temp);
  const double grid = oracle::grid_temperature(logits, labels);
  c.require(after < before, fmt("NLL %.6f not below %.6f", after, before));
  c.require(std::abs(temp - grid) <= 1e-2, fmt("T %.4f vs grid %.2f", temp, grid));

  std::size_t changed = 0, total = 0;
  auto argmax = [](const std::vector<double>& v) { return std::max_element(v.begin(), v.end()) - v.begin(); };
  for (const auto& z : logits) changed += argmax(softmax(z, temp)) != argmax(softmax(z)), ++total;
  for (const auto& z : val_logits) changed += argmax(softmax(z, t_ref)) != argmax(softmax(z)), ++total;
  c.require(changed == 0, std::to_string(changed) + " argmax changes");
  c.note(fmt("overconfident T %.4f (grid %.2f), NLL %.4f -> %.4f", temp, grid, before, after) +
         fmt(", reference T %.4f, argmax kept on %.0f samples", t_ref, double(total)));
  return c.o;
}

Outcome recall_precision() {
  Check c;
  auto rp = retrieval_recall_precision({"8471:0", "8471:2", "8471:5", "8471:9"}, {"8471:0", "8471:2", "8471:5", "8471:7"});
  c.require(rp.recall == 0.75 && rp.precision == 0.75, fmt("got (%.17g, %.17g)", rp.recall, rp.precision));
  c.note(fmt("(%.2f, %.2f)", rp.recall, rp.precision));
  return c.o;
}

Outcome hierarchy() {
  Check c;
  std::size_t grids = 0, predictions = 0;
  double worst_gap = 0.0;
  auto check_grid = [&](const TopKGrid& g, const std::string& where) {
    for (std::size_t k : {1, 3, 5})
      c.require(g.at("HS4").at(k) >= g.at("HS6").at(k), where + " HS4 < HS6 at k=" + std::to_string(k));
    ++grids;
  };
  for (const testing::TrainedCorpus* t : {&reference(), &testing::small_trained_corpus()}) {
    auto r = evaluate(t->model, t->corpus.manual, t->corpus.kb, t->split.train, t->split.test, EvalOptions{});
    check_grid(r.topk, "test set");
    for (const auto& [name, g] : r.groups) check_grid(g.topk, name);
    for (const auto& dc : t->split.test) {
      auto tokens = tokenize(dc.description);
      auto sub = predict(t->model, tokens, HsLevel::subheading);
      auto head = predict(t->model, tokens, HsLevel::heading);
      std::map<HsCode, double> sums;
      for (const auto& l : sub.ranked) sums[l.code.heading()] += l.calibrated_prob;
      for (const auto& l : head.ranked) worst_gap = std::max(worst_gap, std::abs(l.calibrated_prob - sums[l.code]));
      c.require(head.ranked.size() == sums.size(), "heading count mismatch");
      ++predictions;
    }
  }
  c.require(worst_gap <= 1e-12, fmt("prefix-sum gap %.3g", worst_gap));
  c.note(std::to_string(grids) + " grids ordered, " + std::to_string(predictions) + fmt(" predictions, max gap %.3g", worst_gap));
  return c.o;
}

struct RunOutput {
  std::string artifact, eval_json, report_json;
};

RunOutput full_run() {
  auto t = testing::trained_synthetic(SyntheticSpec{}, reference_config());
  auto result = evaluate(t.model, t.corpus.manual, t.corpus.kb, t.split.train, t.split.test, EvalOptions{});
  ReportRequest request;
  request.description = t.split.test[0].description;
  request.generated_at = "2026-01-01T00:00:00Z";
  return {serialize_model(t.model), to_json(result).dump(2),
          render(build_report(t.model, t.corpus.manual, t.corpus.kb, request), ReportFormat::json)};
}

Outcome determinism() {
  Check c;
  auto a = full_run();
  auto b = full_run();
  c.require(a.artifact == b.artifact, "model artifacts differ");
  c.require(a.eval_json == b.eval_json, "evaluation output differs");
  c.require(a.report_json == b.report_json, "report JSON differs");
  c.require(a.artifact == serialize_model(reference().model), "artifact differs from earlier run");
  c.note("artifact " + std::to_string(a.artifact.size()) + " bytes, report " + std::to_string(a.report_json.size()) +
         " bytes, identical");
  return c.o;
}

Outcome service_contract() {
  Check c;
  const auto dir = fs::temp_directory_path() / "hsassist_acceptance_service";
  auto options = testing::write_service_fixture(dir, testing::small_trained_corpus());
  const auto description = testing::small_trained_corpus().split.test[0].description;
  const auto heading = testing::small_trained_corpus().corpus.manual.headings().begin()->first.digits();
  Service service(options);
  std::size_t probes = 0;
  {
    testing::LiveServer live(service);
    auto cl = live.client();
    auto expect = [&](const httplib::Result& r, int status, const std::string& what) {
      ++probes;
      c.require(r && r->status == status, what + " -> " + (r ? std::to_string(r->status) : "no response"));
    };
    auto classify = [&](const std::string& body) { return cl.Post("/api/v1/classify", body, "application/json"); };

    expect(classify(testing::classify_body(description)), 503, "classify without model");
    expect(cl.Get("/api/v1/manual/" + heading), 503, "manual without model");
    service.install(load_snapshot(options));

    expect(classify(testing::classify_body(description)), 200, "classify");
    expect(classify("{oops"), 400, "malformed JSON");
    expect(classify(testing::classify_body("")), 422, "empty description");
    expect(classify(testing::classify_body(description, {{"k", 100}})), 422, "k=100");
    expect(classify(testing::classify_body(description, {{"k", 0}})), 422, "k=0");
    expect(classify(testing::classify_body(description, {{"n_sentences", 0}})), 422, "n_sentences=0");
    expect(classify(testing::classify_body(description, {{"lambda", -1}})), 422, "lambda<0");
    expect(cl.Get("/api/v1/manual/" + heading), 200, "manual");
    expect(cl.Get("/api/v1/manual/84"), 400, "malformed heading");
    expect(cl.Get("/api/v1/manual/9999"), 404, "unknown heading");

    const auto body = testing::classify_body(description);
    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 50; ++i)
      futures.push_back(std::async(std::launch::async, [&] {
        auto r = live.client().Post("/api/v1/classify", body, "application/json");
        return r && r->status == 200 ? testing::stable_body(r->body) : std::string();
      }));
    std::set<std::string> distinct;
    std::size_t failed = 0;
    for (auto& f : futures) {
      auto s = f.get();
      failed += s.empty();
      distinct.insert(s);
    }
    c.require(failed == 0, std::to_string(failed) + " concurrent requests failed");
    c.require(distinct.size() == 1, std::to_string(distinct.size()) + " distinct concurrent bodies");
  }
  fs::remove_all(dir);
  c.note(std::to_string(probes) + " status probes, 50 concurrent requests identical");
  return c.o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"synthetic-corpus classification", synthetic_classification},
      {"gradient check", gradient_check},
      {"retrieval oracle equivalence", retrieval_oracle},
      {"worked relevance scores exact", worked_scores},
      {"temperature calibration", calibration},
      {"recall/precision fixture", recall_precision},
      {"hierarchy consistency", hierarchy},
      {"end-to-end determinism", determinism},
      {"service contract", service_contract},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

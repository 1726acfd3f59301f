#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "relx/service/store.hpp"
#include "relx/service/workflows.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that clashes with Eigen.
#include <httplib.h>

namespace relx {

inline int http_status(ErrorKind k) {
  switch (k) {
    case ErrorKind::kNotFound:
    case ErrorKind::kUnknownId: return 404;
    case ErrorKind::kConflict:
    case ErrorKind::kState: return 409;
    case ErrorKind::kDegenerateTraining:
    case ErrorKind::kInfeasibleSplit:
    case ErrorKind::kEmptyCorpus: return 422;
    case ErrorKind::kIo: return 500;
    default: return 400;
  }
}

inline std::string to_string_kind(ErrorKind k) {
  switch (k) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kDuplicateId: return "duplicate_id";
    case ErrorKind::kEmptyText: return "empty_text";
    case ErrorKind::kUnknownId: return "unknown_id";
    case ErrorKind::kUnknownLabel: return "unknown_label";
    case ErrorKind::kEmptyCorpus: return "empty_corpus";
    case ErrorKind::kInfeasibleSplit: return "infeasible_split";
    case ErrorKind::kMalformedTree: return "malformed_tree";
    case ErrorKind::kUnmatchedDocument: return "unmatched_document";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kDegenerateTraining: return "degenerate_training";
    case ErrorKind::kConflict: return "conflict";
    case ErrorKind::kNotFound: return "not_found";
    case ErrorKind::kState: return "state";
  }
  return "error";
}

// Workflows accepted by POST /runs besides the extraction methods.
inline const std::vector<std::string>& run_workflows() {
  static const std::vector<std::string> w = {"train", "wsl", "cluster"};
  return w;
}

// Executes one run against a stored corpus and returns (predictions JSONL,
// metrics JSON or null, extra result JSON or null). Shared by CLI and HTTP.
struct RunOutput {
  std::string predictions_jsonl;
  nlohmann::json metrics;
  nlohmann::json result;
};

inline RunOutput execute_run(const Corpus& corpus, const AnalyzedCorpus& a, const std::optional<RelationSet>& gold,
                             const std::string& method, const nlohmann::json& params, const ResourceConfig& res) {
  RunOutput out;
  auto metrics_json = [](const MetricsReport& r) { return nlohmann::json::parse(report_to_json(r).dump()); };
  if (method == "train" || method == "wsl") {
    if (!gold) throw Error(ErrorKind::kConfig, "workflow '" + method + "' needs gold relations");
    if (method == "train") {
      auto t = run_train(corpus, a, *gold, params, res);
      out.predictions_jsonl = predictions_to_jsonl(t.predictions);
      out.metrics = metrics_json(t.report);
    } else {
      auto w = run_wsl(corpus, a, *gold, params, res);
      out.predictions_jsonl = predictions_to_jsonl(w.result.predictions);
      out.metrics = metrics_json(w.report);
      out.result = {{"iterations", w.result.iterations}, {"pseudo_per_iteration", w.result.pseudo_per_iteration}};
    }
    return out;
  }
  if (method == "cluster") {
    auto c = run_cluster(a, params);
    out.predictions_jsonl = predictions_to_jsonl(c.suggestions);
    out.result = clustering_to_json(c.clustering);
    return out;
  }
  auto preds = run_method(corpus, a, method, params, res);
  out.predictions_jsonl = predictions_to_jsonl(preds);
  if (gold) out.metrics = metrics_json(evaluate_predictions(corpus, *gold, preds));
  return out;
}

// REST front end over a DataStore. Runs execute on background threads, one
// at a time per corpus; AL sessions are persisted as append-only audit logs
// and rebuilt by replay on start-up.
class Service {
 public:
  Service(std::filesystem::path data_dir, ResourceConfig resources)
      : store_(std::move(data_dir)), resources_(std::move(resources)), pipeline_(resources_.build()) {
    recover_runs();
    recover_sessions();
  }

  ~Service() { join_workers(); }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  DataStore& store() { return store_; }
  const std::map<std::string, std::string>& quarantined() const { return quarantined_; }

  void join_workers() {
    std::vector<std::thread> ws;
    {
      std::lock_guard<std::mutex> lock(mu_);
      ws.swap(workers_);
    }
    for (auto& t : ws)
      if (t.joinable()) t.join();
  }

  void mount(httplib::Server& srv) {
    srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });
    post(srv, "/corpora", [this](const httplib::Request& req) { return create_corpus(req); });
    get(srv, R"(/corpora/([A-Za-z0-9_-]+))", [this](const httplib::Request& req) { return corpus_info(req.matches[1]); });
    post(srv, R"(/corpora/([A-Za-z0-9_-]+)/parses)", [this](const httplib::Request& req) { return ingest_parses(req); });
    post(srv, R"(/corpora/([A-Za-z0-9_-]+)/gold)", [this](const httplib::Request& req) { return ingest_gold(req); });
    get(srv, R"(/pairs/([A-Za-z0-9_-]+)/([^/]+)/([^/]+))", [this](const httplib::Request& req) {
      return pair_view(req.matches[1], req.matches[2], req.matches[3]);
    });
    post(srv, "/runs", [this](const httplib::Request& req) { return start_run(req); });
    get(srv, R"(/runs/([A-Za-z0-9_-]+))", [this](const httplib::Request& req) { return run_info(req.matches[1]); });
    srv.Get(R"(/runs/([A-Za-z0-9_-]+)/predictions)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto dir = existing_run(req.matches[1]);
        if (!std::filesystem::exists(dir / "predictions.jsonl")) throw Error(ErrorKind::kState, "run has no predictions yet");
        res.set_content(read_file(dir / "predictions.jsonl"), "application/x-ndjson");
      });
    });
    get(srv, R"(/runs/([A-Za-z0-9_-]+)/metrics)", [this](const httplib::Request& req) {
      auto dir = existing_run(req.matches[1]);
      if (!std::filesystem::exists(dir / "metrics.json")) throw Error(ErrorKind::kNotFound, "run has no metrics");
      return Reply{200, nlohmann::json::parse(read_file(dir / "metrics.json"))};
    });
    post(srv, "/al/sessions", [this](const httplib::Request& req) { return create_session(req); });
    get(srv, R"(/al/sessions/([A-Za-z0-9_-]+))", [this](const httplib::Request& req) {
      std::lock_guard<std::mutex> lock(al_mu_);
      return Reply{200, session(req.matches[1]).state_json()};
    });
    get(srv, R"(/al/sessions/([A-Za-z0-9_-]+)/next)", [this](const httplib::Request& req) { return next_query(req.matches[1]); });
    post(srv, R"(/al/sessions/([A-Za-z0-9_-]+)/labels)", [this](const httplib::Request& req) { return submit_label(req); });
    srv.Get(R"(/al/sessions/([A-Za-z0-9_-]+)/audit)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::lock_guard<std::mutex> lock(al_mu_);
        res.set_content(session(req.matches[1]).audit_jsonl(), "application/x-ndjson");
      });
    });
  }

 private:
  struct Reply {
    int status = 200;
    nlohmann::json body;
  };
  struct Corpus_ {
    StoredCorpus stored;
    AnalyzedCorpus analyzed;
  };

  static void send_error(httplib::Response& res, const Error& e) {
    res.status = http_status(e.kind());
    res.set_content(nlohmann::json{{"error", to_string_kind(e.kind())}, {"message", e.what()}}.dump(), "application/json");
  }

  template <typename F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const nlohmann::json::exception& e) {
      send_error(res, Error(ErrorKind::kParse, e.what()));
    } catch (const std::exception& e) {
      send_error(res, Error(ErrorKind::kIo, e.what()));
    }
  }

  template <typename H>
  void get(httplib::Server& srv, const std::string& pattern, H handler) {
    srv.Get(pattern, [handler](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        Reply r = handler(req);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
      });
    });
  }

  // POST with optional Idempotency-Key replay.
  template <typename H>
  void post(httplib::Server& srv, const std::string& pattern, H handler) {
    srv.Post(pattern, [this, handler](const httplib::Request& req, httplib::Response& res) {
      std::string key = req.get_header_value("Idempotency-Key");
      std::string full_key = key.empty() ? "" : req.path + "\n" + key;
      if (!full_key.empty()) {
        std::lock_guard<std::mutex> lock(idem_mu_);
        if (auto prior = store_.idempotent_response(full_key)) {
          res.status = prior->at("status").get<int>();
          res.set_content(prior->at("body").get<std::string>(), prior->at("content_type").get<std::string>());
          return;
        }
      }
      guarded(res, [&] {
        Reply r = handler(req);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
      });
      if (!full_key.empty() && res.status < 500) {
        std::lock_guard<std::mutex> lock(idem_mu_);
        store_.remember_response(full_key, res.status, res.body, "application/json");
      }
    });
  }

  static nlohmann::json body_json(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kParse, std::string("request body: ") + e.what());
    }
  }

  // Requirements as a JSONL string or an array of requirement objects.
  static std::string jsonl_field(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_string()) return v.get<std::string>();
    std::string out;
    for (const auto& x : v) out += x.dump() + "\n";
    return out;
  }

  Reply create_corpus(const httplib::Request& req) {
    auto j = body_json(req);
    if (!j.contains("requirements")) throw Error(ErrorKind::kConfig, "body needs 'requirements'");
    Corpus c = parse_requirements_jsonl(jsonl_field(j, "requirements"), "requirements");
    if (c.empty()) throw Error(ErrorKind::kEmptyCorpus, "no requirements given");
    std::string id = store_.save_corpus(c);
    if (j.contains("conllu")) {
      std::string conllu = j.at("conllu").get<std::string>();
      parse_conllu(conllu, c, pipeline_.preprocess, "conllu");
      store_.save_parses(id, conllu);
    }
    if (j.contains("gold")) {
      RelationSet g = parse_relation_set_jsonl(jsonl_field(j, "gold"), c, "gold");
      g.complete = j.value("complete", false);
      store_.save_gold(id, g);
    }
    evict(id);
    return {201, corpus_summary(id)};
  }

  nlohmann::json corpus_summary(const std::string& id) {
    auto c = corpus(id);
    nlohmann::json j = {{"corpus_id", id}, {"requirements", c->stored.corpus.size()},
                        {"pairs", c->stored.corpus.size() * (c->stored.corpus.size() - 1) / 2},
                        {"parsed", c->stored.ingested(pipeline_.preprocess).size()}};
    j["gold"] = c->stored.gold ? relation_counts_json(*c->stored.gold) : nlohmann::json();
    return j;
  }

  Reply corpus_info(const std::string& id) { return {200, corpus_summary(id)}; }

  Reply ingest_parses(const httplib::Request& req) {
    std::string id = req.matches[1];
    auto c = corpus(id);
    std::string conllu = req.body;
    if (!conllu.empty() && conllu.front() == '{') conllu = body_json(req).at("conllu").get<std::string>();
    auto parsed = parse_conllu(conllu, c->stored.corpus, pipeline_.preprocess, "conllu");
    store_.save_parses(id, conllu);
    evict(id);
    return {200, {{"corpus_id", id}, {"parsed", parsed.size()}}};
  }

  Reply ingest_gold(const httplib::Request& req) {
    std::string id = req.matches[1];
    auto c = corpus(id);
    auto j = body_json(req);
    RelationSet g = parse_relation_set_jsonl(jsonl_field(j, "relations"), c->stored.corpus, "gold");
    g.complete = j.value("complete", false);
    store_.save_gold(id, g);
    evict(id);
    return {200, {{"corpus_id", id}, {"gold", relation_counts_json(g)}, {"warnings", g.warnings}}};
  }

  Reply pair_view(const std::string& cid, const std::string& a, const std::string& b) {
    auto c = corpus(cid);
    const auto& corp = c->stored.corpus;
    PairKey key = canonical_pair(a, b);
    auto side = [&](const std::string& id) {
      const auto& p = c->analyzed.parses[c->analyzed.index_of(id)];
      nlohmann::json tokens = nlohmann::json::array(), mentions = nlohmann::json::array();
      for (const auto& t : p.tokens) tokens.push_back({{"surface", t.surface}, {"lemma", t.lemma}, {"pos", t.pos}});
      for (const auto& m : p.mentions)
        mentions.push_back({{"begin", m.span.begin}, {"end", m.span.end}, {"type", m.entity_type}, {"canonical", m.canonical}});
      return nlohmann::json{{"id", id}, {"text", corp.at(id).text}, {"doc_id", corp.at(id).doc_id}, {"tokens", tokens},
                            {"mentions", mentions}, {"has_arcs", p.has_arcs()}};
    };
    nlohmann::json preds = nlohmann::json::array();
    for (const auto& rid : store_.list("runs")) {
      auto dir = store_.run_dir(rid);
      if (!std::filesystem::exists(dir / "run.json") || !std::filesystem::exists(dir / "predictions.jsonl")) continue;
      auto run = nlohmann::json::parse(read_file(dir / "run.json"));
      if (run.value("corpus_id", "") != cid) continue;
      for (const auto& p : parse_predictions_jsonl(read_file(dir / "predictions.jsonl")))
        if (p.pair() == key) {
          auto pj = nlohmann::json::parse(prediction_to_json(p).dump());
          pj["run_id"] = rid;
          preds.push_back(pj);
        }
    }
    nlohmann::json gold;
    if (c->stored.gold)
      for (const auto& r : c->stored.gold->instances)
        if (r.pair() == key) gold = {{"source", r.source_id}, {"target", r.target_id}, {"type", to_string(r.rtype)}};
    return {200, {{"source", side(key.source)}, {"target", side(key.target)}, {"predictions", preds}, {"gold", gold}}};
  }

  Reply start_run(const httplib::Request& req) {
    auto j = body_json(req);
    std::string cid = j.at("corpus_id").get<std::string>();
    std::string method = j.at("method").get<std::string>();
    nlohmann::json params = j.value("params", nlohmann::json::object());
    if (j.contains("seed")) params["seed"] = j.at("seed");
    const auto& ms = extraction_methods();
    const auto& ws = run_workflows();
    if (std::find(ms.begin(), ms.end(), method) == ms.end() && std::find(ws.begin(), ws.end(), method) == ws.end())
      throw Error(ErrorKind::kConfig, "unknown method '" + method + "'");
    auto c = corpus(cid);
    std::string rid;
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (busy_.count(cid)) throw Error(ErrorKind::kConflict, "a run is already in progress for corpus " + cid);
      busy_.insert(cid);
    }
    try {
      rid = store_.next_id("runs", "r");
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      busy_.erase(cid);
      throw;
    }
    nlohmann::json record = {{"run_id", rid}, {"corpus_id", cid}, {"method", method}, {"params", params}, {"status", "running"},
                             {"created", utc_timestamp()}};
    auto dir = store_.run_dir(rid);
    DataStore::write_atomic(dir / "run.json", record.dump(2));
    std::lock_guard<std::mutex> lock(mu_);
    workers_.emplace_back([this, c, rid, cid, method, params, record]() mutable {
      auto dir = store_.run_dir(rid);
      auto start = std::chrono::steady_clock::now();
      try {
        RunOutput out = execute_run(c->stored.corpus, c->analyzed, c->stored.gold, method, params, resources_);
        DataStore::write_atomic(dir / "predictions.jsonl", out.predictions_jsonl);
        if (!out.metrics.is_null()) DataStore::write_atomic(dir / "metrics.json", out.metrics.dump(2));
        if (!out.result.is_null()) record["result"] = out.result;
        record["status"] = "done";
      } catch (const std::exception& e) {
        record["status"] = "failed";
        record["error"] = e.what();
      }
      record["elapsed_ms"] = elapsed_ms(start);
      DataStore::write_atomic(dir / "run.json", record.dump(2));
      std::lock_guard<std::mutex> lock(mu_);
      busy_.erase(cid);
    });
    return {202, record};
  }

  std::filesystem::path existing_run(const std::string& rid) {
    auto dir = store_.run_dir(rid);
    if (!std::filesystem::exists(dir / "run.json")) throw Error(ErrorKind::kNotFound, "unknown run '" + rid + "'");
    return dir;
  }

  Reply run_info(const std::string& rid) { return {200, nlohmann::json::parse(read_file(existing_run(rid) / "run.json"))}; }

  // --- active learning ---

  ALSession build_session(const std::string& sid, const nlohmann::json& spec) {
    auto c = corpus(spec.at("corpus_id").get<std::string>());
    const RelationSet* gold = c->stored.gold ? &*c->stored.gold : nullptr;
    return make_al_session(sid, c->stored.corpus, c->analyzed, gold, spec.value("params", nlohmann::json::object()), resources_);
  }

  void attach(ALSession& s) {
    auto dir = store_.session_dir(s.id());
    s.on_event([dir](const AuditEvent& e) { DataStore::append_line(dir / "audit.jsonl", e.to_json().dump()); });
  }

  void persist_state(const ALSession& s) {
    DataStore::write_atomic(store_.session_dir(s.id()) / "state.json", s.state_json().dump(2));
  }

  ALSession& session(const std::string& sid) {
    if (auto q = quarantined_.find(sid); q != quarantined_.end())
      throw Error(ErrorKind::kState, "session " + sid + " is quarantined: " + q->second);
    auto it = sessions_.find(sid);
    if (it == sessions_.end()) throw Error(ErrorKind::kNotFound, "unknown session '" + sid + "'");
    return *it->second;
  }

  Reply create_session(const httplib::Request& req) {
    auto j = body_json(req);
    nlohmann::json spec = {{"corpus_id", j.at("corpus_id")}, {"params", j.value("params", nlohmann::json::object())}};
    corpus(spec.at("corpus_id").get<std::string>());
    std::string sid = store_.next_id("al", "s");
    try {
      auto s = std::make_unique<ALSession>(build_session(sid, spec));
      DataStore::write_atomic(store_.session_dir(sid) / "session.json", spec.dump(2));
      write_file(store_.session_dir(sid) / "audit.jsonl", "");
      attach(*s);
      persist_state(*s);
      std::lock_guard<std::mutex> lock(al_mu_);
      auto state = s->state_json();
      sessions_[sid] = std::move(s);
      return {201, state};
    } catch (...) {
      std::filesystem::remove_all(store_.session_dir(sid));
      throw;
    }
  }

  static nlohmann::json query_json(const OracleQuery& q, const Corpus& c) {
    return {{"source", q.pair.source}, {"target", q.pair.target}, {"source_text", c.at(q.pair.source).text},
            {"target_text", c.at(q.pair.target).text}, {"confidence", q.confidence},
            {"predicted", q.predicted ? nlohmann::json(to_string(*q.predicted)) : nlohmann::json()}, {"votes", q.votes}};
  }

  const Corpus& session_corpus(const std::string& sid) {
    auto spec = nlohmann::json::parse(read_file(store_.session_dir(sid) / "session.json"));
    return corpus(spec.at("corpus_id").get<std::string>())->stored.corpus;
  }

  // Advances the session until a query is pending or it completes. Scripted
  // oracles advance a single step per call.
  Reply next_query(const std::string& sid) {
    std::lock_guard<std::mutex> lock(al_mu_);
    ALSession& s = session(sid);
    if (s.config().oracle == OracleKind::kScriptedGold) {
      s.step();
    } else {
      while (!s.pending() && !s.complete()) s.step();
    }
    persist_state(s);
    nlohmann::json j = {{"state", s.state_json()}};
    j["query"] = s.pending() ? query_json(*s.pending(), session_corpus(sid)) : nlohmann::json();
    return {200, j};
  }

  Reply submit_label(const httplib::Request& req) {
    std::string sid = req.matches[1];
    auto j = body_json(req);
    std::lock_guard<std::mutex> lock(al_mu_);
    ALSession& s = session(sid);
    PairKey pair{j.at("source").get<std::string>(), j.at("target").get<std::string>()};
    RelationType type = relation_type_from(j.at("type").get<std::string>());
    std::optional<bool> forward;
    if (j.contains("direction")) {
      std::string d = j.at("direction").get<std::string>();
      if (d == "source_to_target") forward = true;
      else if (d == "target_to_source") forward = false;
      else throw Error(ErrorKind::kConfig, "direction must be 'source_to_target' or 'target_to_source'");
    }
    s.label(pair, type, forward);
    persist_state(s);
    return {200, s.state_json()};
  }

  // --- corpus cache ---

  std::shared_ptr<Corpus_> corpus(const std::string& id) {
    {
      std::lock_guard<std::mutex> lock(cache_mu_);
      auto it = cache_.find(id);
      if (it != cache_.end()) return it->second;
    }
    auto c = std::make_shared<Corpus_>();
    c->stored = store_.load_corpus(id);
    c->analyzed = analyze(c->stored.corpus, c->stored.ingested(pipeline_.preprocess), pipeline_);
    std::lock_guard<std::mutex> lock(cache_mu_);
    return cache_.emplace(id, c).first->second;
  }

  void evict(const std::string& id) {
    std::lock_guard<std::mutex> lock(cache_mu_);
    cache_.erase(id);
  }

  // --- recovery ---

  void recover_runs() {
    for (const auto& rid : store_.list("runs")) {
      auto p = store_.run_dir(rid) / "run.json";
      if (!std::filesystem::exists(p)) continue;
      try {
        auto rec = nlohmann::json::parse(read_file(p));
        if (rec.value("status", "") == "running") {
          rec["status"] = "failed";
          rec["error"] = "interrupted by service restart";
          DataStore::write_atomic(p, rec.dump(2));
        }
      } catch (const std::exception&) {
      }
    }
  }

  void recover_sessions() {
    for (const auto& sid : store_.list("al")) {
      auto dir = store_.session_dir(sid);
      if (!std::filesystem::exists(dir / "session.json")) continue;
      try {
        auto spec = nlohmann::json::parse(read_file(dir / "session.json"));
        std::string audit = std::filesystem::exists(dir / "audit.jsonl") ? read_file(dir / "audit.jsonl") : "";
        auto s = std::make_unique<ALSession>(replay_session(build_session(sid, spec), audit, (dir / "audit.jsonl").string()));
        attach(*s);
        persist_state(*s);
        sessions_[sid] = std::move(s);
      } catch (const std::exception& e) {
        quarantined_[sid] = e.what();
        DataStore::write_atomic(dir / "quarantine.json", nlohmann::json{{"reason", e.what()}}.dump(2));
      }
    }
  }

  DataStore store_;
  ResourceConfig resources_;
  PipelineResources pipeline_;
  std::mutex mu_, al_mu_, cache_mu_, idem_mu_;
  std::set<std::string> busy_;
  std::vector<std::thread> workers_;
  std::map<std::string, std::unique_ptr<ALSession>> sessions_;
  std::map<std::string, std::string> quarantined_;
  std::map<std::string, std::shared_ptr<Corpus_>> cache_;
};

}  // namespace relx

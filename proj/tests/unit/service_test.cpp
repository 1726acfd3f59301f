#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <thread>

#include "relx/service/server.hpp"
#include "support.hpp"

using namespace relx;
using relx::test::fixture;
using relx::test::resources;
using relx::test::run_command;
using relx::test::TempDir;

namespace {

struct Harness {
  Service service;
  httplib::Server server;
  std::thread thread;
  int port = -1;

  explicit Harness(const std::filesystem::path& dir) : service(dir, resources()) {
    service.mount(server);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Harness() {
    server.stop();
    thread.join();
    service.join_workers();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(120, 0);
    return c;
  }
};

nlohmann::json corpus_body(const std::string& dir, bool with_gold) {
  nlohmann::json b = {{"requirements", read_file(fixture(dir + "/requirements.jsonl"))},
                      {"conllu", read_file(fixture(dir + "/parses.conllu"))}};
  if (with_gold) {
    b["gold"] = read_file(fixture(dir + "/multiclass.jsonl"));
    b["complete"] = false;
  }
  return b;
}

nlohmann::json post_json(httplib::Client& c, const std::string& path, const nlohmann::json& body, int expect,
                         const std::string& idem = "") {
  httplib::Headers h;
  if (!idem.empty()) h.emplace("Idempotency-Key", idem);
  auto r = c.Post(path, h, body.dump(), "application/json");
  EXPECT_TRUE(r) << path;
  if (!r) return {};
  EXPECT_EQ(r->status, expect) << path << ": " << r->body;
  return nlohmann::json::parse(r->body);
}

nlohmann::json get_json(httplib::Client& c, const std::string& path, int expect = 200) {
  auto r = c.Get(path);
  EXPECT_TRUE(r) << path;
  if (!r) return {};
  EXPECT_EQ(r->status, expect) << path << ": " << r->body;
  return nlohmann::json::parse(r->body);
}

nlohmann::json wait_run(httplib::Client& c, const std::string& rid) {
  for (int i = 0; i < 600; ++i) {
    auto j = get_json(c, "/runs/" + rid);
    if (j.value("status", "") != "running") return j;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  return {};
}

std::string cli() { return RELX_CLI_PATH; }

// Small AL spec over the ertms fixture: explicit seeds and pool keep steps fast.
nlohmann::json al_params() {
  nlohmann::json seeds = nlohmann::json::array(), pool = nlohmann::json::array();
  std::ifstream in(fixture("ertms/multiclass.jsonl"));
  std::string line;
  int i = 0;
  while (std::getline(in, line) && i < 260) {
    auto j = nlohmann::json::parse(line);
    if (i < 200) seeds.push_back({{"source", j["source"]}, {"target", j["target"]}, {"type", j["type"]}});
    else pool.push_back({j["source"], j["target"]});
    ++i;
  }
  return {{"seed_labels", seeds}, {"unlabeled", pool}, {"thresholds", {{"low", 0.99}, {"high", 1.0}}}, {"oracle", "human_api"}};
}

}  // namespace

TEST(Service, HealthAndErrorMapping) {
  EXPECT_EQ(http_status(ErrorKind::kUnknownId), 404);
  EXPECT_EQ(http_status(ErrorKind::kState), 409);
  EXPECT_EQ(http_status(ErrorKind::kDegenerateTraining), 422);
  EXPECT_EQ(http_status(ErrorKind::kConfig), 400);
  TempDir tmp;
  Harness h(tmp.path);
  auto c = h.client();
  EXPECT_EQ(get_json(c, "/health")["status"], "ok");
  EXPECT_EQ(get_json(c, "/corpora/c000000000000", 404)["error"], "not_found");
  EXPECT_EQ(get_json(c, "/runs/r999999", 404)["error"], "not_found");
  EXPECT_EQ(get_json(c, "/al/sessions/s999999", 404)["error"], "not_found");
  auto r = c.Post("/corpora", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  post_json(c, "/corpora", {{"requirements", ""}}, 422);
  post_json(c, "/corpora", {{"text", "x"}}, 400);
}

TEST(Service, CorpusCreateInfoAndPairView) {
  TempDir tmp;
  Harness h(tmp.path);
  auto c = h.client();
  auto j = post_json(c, "/corpora", corpus_body("samples", false), 201);
  std::string cid = j["corpus_id"];
  EXPECT_EQ(cid.size(), 13u);
  EXPECT_EQ(j["requirements"], 6);
  EXPECT_EQ(j["pairs"], 15);
  EXPECT_EQ(j["parsed"], 6);
  EXPECT_EQ(get_json(c, "/corpora/" + cid), j);

  auto run = post_json(c, "/runs", {{"corpus_id", cid}, {"method", "pattern"}}, 202);
  ASSERT_EQ(wait_run(c, run["run_id"])["status"], "done");
  auto view = get_json(c, "/pairs/" + cid + "/S1B/S1A");
  EXPECT_EQ(view["source"]["id"], "S1A");
  EXPECT_EQ(view["target"]["id"], "S1B");
  EXPECT_FALSE(view["source"]["tokens"].empty());
  EXPECT_TRUE(view["source"]["has_arcs"].get<bool>());
  ASSERT_FALSE(view["predictions"].empty());
  EXPECT_EQ(view["predictions"][0]["run_id"], run["run_id"]);
  get_json(c, "/pairs/" + cid + "/S1A/NOPE", 404);
}

TEST(Service, IdempotencyKeyReplaysResponse) {
  TempDir tmp;
  Harness h(tmp.path);
  auto c = h.client();
  auto cid = post_json(c, "/corpora", corpus_body("samples", false), 201)["corpus_id"].get<std::string>();
  nlohmann::json body = {{"corpus_id", cid}, {"method", "crossref"}};
  auto a = post_json(c, "/runs", body, 202, "k-1");
  h.service.join_workers();
  auto b = post_json(c, "/runs", body, 202, "k-1");
  EXPECT_EQ(a, b);
  EXPECT_EQ(h.service.store().list("runs").size(), 1u);
  h.service.join_workers();
  auto d = post_json(c, "/runs", body, 202, "k-2");
  EXPECT_NE(d["run_id"], a["run_id"]);
}

TEST(Service, RunLifecycleMatchesCli) {
  TempDir tmp;
  Harness h(tmp.path);
  auto c = h.client();
  auto cid = post_json(c, "/corpora", corpus_body("samples", false), 201)["corpus_id"].get<std::string>();
  for (std::string method : {"pattern", "crossref", "tfidf", "ontology"}) {
    auto run = post_json(c, "/runs", {{"corpus_id", cid}, {"method", method}, {"seed", 7}}, 202);
    EXPECT_EQ(run["status"], "running");
    auto done = wait_run(c, run["run_id"]);
    ASSERT_EQ(done["status"], "done") << done.dump();
    auto http = c.Get("/runs/" + run["run_id"].get<std::string>() + "/predictions");
    ASSERT_TRUE(http);
    auto local = run_command(cli() + " extract --corpus " + fixture("samples/requirements.jsonl").string() + " --parses " +
                             fixture("samples/parses.conllu").string() + " --method " + method);
    ASSERT_EQ(local.status, 0);
    EXPECT_EQ(http->body, local.out) << method;
  }
  post_json(c, "/runs", {{"corpus_id", cid}, {"method", "telepathy"}}, 400);
  post_json(c, "/runs", {{"corpus_id", "c000000000000"}, {"method", "pattern"}}, 404);
  get_json(c, "/runs/r000001/metrics", 404);
}

TEST(Service, SecondRunOnBusyCorpusConflicts) {
  TempDir tmp;
  Harness h(tmp.path);
  auto c = h.client();
  auto cid = post_json(c, "/corpora", corpus_body("ertms", true), 201)["corpus_id"].get<std::string>();
  auto first = post_json(c, "/runs", {{"corpus_id", cid}, {"method", "train"}, {"params", {{"classifier", "knn"}, {"folds", 3}}}},
                         202);
  auto second = post_json(c, "/runs", {{"corpus_id", cid}, {"method", "tfidf"}}, 409);
  EXPECT_EQ(second["error"], "conflict");
  auto done = wait_run(c, first["run_id"]);
  EXPECT_EQ(done["status"], "done") << done.dump();
  auto m = get_json(c, "/runs/" + first["run_id"].get<std::string>() + "/metrics");
  EXPECT_TRUE(m.contains("accuracy"));
  post_json(c, "/runs", {{"corpus_id", cid}, {"method", "tfidf"}}, 202);
}

TEST(Service, InterruptedRunIsMarkedFailedOnRestart) {
  TempDir tmp;
  {
    DataStore store(tmp.path);
    auto dir = store.run_dir("r000001");
    DataStore::write_atomic(dir / "run.json", R"({"run_id":"r000001","corpus_id":"cx","status":"running"})");
  }
  Harness h(tmp.path);
  auto c = h.client();
  auto j = get_json(c, "/runs/r000001");
  EXPECT_EQ(j["status"], "failed");
  EXPECT_NE(j["error"].get<std::string>().find("restart"), std::string::npos);
}

TEST(Service, ActiveLearningSurvivesRestart) {
  TempDir tmp;
  std::string sid;
  nlohmann::json before;
  std::string audit_before;
  {
    Harness h(tmp.path);
    auto c = h.client();
    auto cid = post_json(c, "/corpora", corpus_body("ertms", true), 201)["corpus_id"].get<std::string>();
    auto created = post_json(c, "/al/sessions", {{"corpus_id", cid}, {"params", al_params()}}, 201, "al-1");
    sid = created["session_id"];
    EXPECT_EQ(post_json(c, "/al/sessions", {{"corpus_id", cid}, {"params", al_params()}}, 201, "al-1")["session_id"], sid);
    EXPECT_EQ(h.service.store().list("al").size(), 1u);

    auto next = get_json(c, "/al/sessions/" + sid + "/next");
    ASSERT_FALSE(next["query"].is_null()) << next.dump();
    std::string s = next["query"]["source"], t = next["query"]["target"];
    auto wrong = post_json(c, "/al/sessions/" + sid + "/labels", {{"source", t == "R001" ? "R002" : "R001"}, {"target", t}, {"type", "none"}},
                           409);
    EXPECT_EQ(wrong["error"], "conflict");
    post_json(c, "/al/sessions/" + sid + "/labels", {{"source", s}, {"target", t}, {"type", "requires"}}, 400);
    post_json(c, "/al/sessions/" + sid + "/labels",
              {{"source", s}, {"target", t}, {"type", "requires"}, {"direction", "sideways"}}, 400);
    auto after = post_json(c, "/al/sessions/" + sid + "/labels",
                           {{"source", s}, {"target", t}, {"type", "requires"}, {"direction", "target_to_source"}}, 200);
    EXPECT_TRUE(after["pending"].is_null());
    next = get_json(c, "/al/sessions/" + sid + "/next");
    before = get_json(c, "/al/sessions/" + sid);
    audit_before = c.Get("/al/sessions/" + sid + "/audit")->body;
    EXPECT_NE(audit_before.find("oracle_labeled"), std::string::npos);
  }
  Harness h(tmp.path);
  EXPECT_TRUE(h.service.quarantined().empty());
  auto c = h.client();
  EXPECT_EQ(get_json(c, "/al/sessions/" + sid), before);
  EXPECT_EQ(c.Get("/al/sessions/" + sid + "/audit")->body, audit_before);
}

TEST(Service, CorruptAuditQuarantinesSession) {
  TempDir tmp;
  std::string sid;
  {
    Harness h(tmp.path);
    auto c = h.client();
    auto cid = post_json(c, "/corpora", corpus_body("ertms", true), 201)["corpus_id"].get<std::string>();
    sid = post_json(c, "/al/sessions", {{"corpus_id", cid}, {"params", al_params()}}, 201)["session_id"];
    get_json(c, "/al/sessions/" + sid + "/next");
  }
  DataStore::append_line(tmp.path / "al" / sid / "audit.jsonl", "{\"iter\":1,\"action\":\"teleported\",\"pair\":null,\"label\":null}");
  Harness h(tmp.path);
  ASSERT_EQ(h.service.quarantined().count(sid), 1u);
  EXPECT_TRUE(std::filesystem::exists(tmp.path / "al" / sid / "quarantine.json"));
  auto c = h.client();
  EXPECT_EQ(get_json(c, "/al/sessions/" + sid, 409)["error"], "state");
  get_json(c, "/al/sessions/" + sid + "/next", 409);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_command(cli()).status, 2);
  EXPECT_EQ(run_command(cli() + " extract --bogus").status, 2);
  std::string figs = " --corpus " + fixture("samples/requirements.jsonl").string();
  EXPECT_EQ(run_command(cli() + " extract --method telepathy" + figs).status, 2);
  EXPECT_EQ(run_command(cli() + " extract --method tfidf --corpus /nonexistent/reqs.jsonl").status, 1);
  EXPECT_EQ(run_command(cli() + " train" + figs).status, 2);
  auto ok = run_command(cli() + " load" + figs);
  ASSERT_EQ(ok.status, 0);
  EXPECT_EQ(nlohmann::json::parse(ok.out)["requirements"], 6);
}

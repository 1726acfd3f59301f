// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <signal.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include "../unit/oracles.hpp"
#include "../unit/support.hpp"
#include "relx/eval/metrics.hpp"
#include "relx/learning/active.hpp"
#include "relx/learning/kmeans.hpp"
#include "relx/learning/wsl.hpp"
#include "relx/retrieval/ontology.hpp"
#include "relx/service/workflows.hpp"
#include "relx/vector/lsa.hpp"
#include "relx/vector/tfidf.hpp"

#include <httplib.h>

using namespace relx;
using relx::test::fixture;
using relx::test::resources;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Runs a criterion; exceptions count as failure.
template <typename F>
void criterion(const std::string& name, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(false, name, std::string("exception: ") + e.what());
  }
}

const RelationType kLabels[] = {RelationType::None, RelationType::Requires, RelationType::IsSimilar, RelationType::Details};

PairKey key(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "p%04d", i);
  return {buf, "q"};
}

// Largest deviation between the library and the oracle on one random set.
double metrics_delta(std::mt19937_64& rng) {
  int n = std::uniform_int_distribution<int>(5, 60)(rng);
  int classes = std::uniform_int_distribution<int>(2, 4)(rng);
  std::uniform_int_distribution<int> lab(0, classes - 1);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<int> gold, pred;
  std::vector<double> conf;
  LabelMap g, second;
  std::map<PairKey, std::pair<RelationType, double>> decided;
  for (int i = 0; i < n; ++i) {
    int y = lab(rng);
    bool has = std::bernoulli_distribution(0.8)(rng);
    int p = has ? lab(rng) : 0;
    double c = has ? u(rng) : 1.0;
    gold.push_back(y);
    pred.push_back(p);
    conf.push_back(c);
    g[key(i)] = kLabels[y];
    second[key(i)] = kLabels[p];
    if (has) decided[key(i)] = {kLabels[p], c};
  }
  MetricsReport r = evaluate(g, decided);
  double d = std::abs(r.accuracy - oracle::accuracy(gold, pred));
  std::set<int> present(gold.begin(), gold.end());
  present.insert(pred.begin(), pred.end());
  present.insert(0);
  if (r.matrix.classes.size() != present.size()) return 1.0;
  double ap_sum = 0;
  for (int c : present) {
    auto want = oracle::prf(gold, pred, c);
    const Prf& got = r.per_class.at(kLabels[c]);
    d = std::max({d, std::abs(got.precision - want.p), std::abs(got.recall - want.r), std::abs(got.f1 - want.f1)});
    std::vector<double> score(gold.size());
    std::vector<bool> rel(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
      score[i] = pred[i] == c ? conf[i] : 0.0;
      rel[i] = gold[i] == c;
    }
    std::vector<std::size_t> order(gold.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    double ap = oracle::average_precision(order, rel);
    d = std::max(d, std::abs(r.ap.at(kLabels[c]).ap - ap));
    ap_sum += ap;
  }
  d = std::max(d, std::abs(r.map - ap_sum / static_cast<double>(present.size())));
  d = std::max(d, std::abs(cohens_kappa(g, second).kappa - oracle::kappa(gold, pred)));
  return d;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

// --- subprocess server for the parity check ---

struct ServerProcess {
  FILE* pipe = nullptr;
  pid_t pid = -1;
  int port = -1;

  explicit ServerProcess(const std::filesystem::path& data_dir) {
    std::string cmd = "sh -c 'echo $$; exec " + std::string(RELX_CLI_PATH) + " serve --port 0 --data-dir " + data_dir.string() +
                      "' 2>/dev/null";
    pipe = popen(cmd.c_str(), "r");
    if (!pipe) return;
    char line[256];
    if (std::fgets(line, sizeof line, pipe)) pid = static_cast<pid_t>(std::atoi(line));
    if (std::fgets(line, sizeof line, pipe)) {
      std::string s = line;
      auto colon = s.rfind(':');
      if (s.rfind("listening on", 0) == 0 && colon != std::string::npos) port = std::atoi(s.c_str() + colon + 1);
    }
  }
  ~ServerProcess() {
    if (pid > 0) kill(pid, SIGTERM);
    if (pipe) pclose(pipe);
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(300, 0);
    return c;
  }
};

nlohmann::json post(httplib::Client& c, const std::string& path, const nlohmann::json& body) {
  auto r = c.Post(path, body.dump(), "application/json");
  if (!r) throw Error(ErrorKind::kIo, "no response from " + path);
  if (r->status >= 300) throw Error(ErrorKind::kIo, path + " -> " + std::to_string(r->status) + " " + r->body);
  return nlohmann::json::parse(r->body);
}

std::string get_body(httplib::Client& c, const std::string& path) {
  auto r = c.Get(path);
  if (!r) throw Error(ErrorKind::kIo, "no response from " + path);
  if (r->status != 200) throw Error(ErrorKind::kIo, path + " -> " + std::to_string(r->status) + " " + r->body);
  return r->body;
}

}  // namespace

int main() {
  std::unique_ptr<relx::test::Loaded> ertms;

  criterion("dataset-counts", [&] {
    auto t0 = Clock::now();
    ertms = relx::test::load_fixture("ertms");
    RelationSet b = load_relation_set(fixture("ertms/binary.jsonl"), ertms->corpus);
    RelationSet m = load_relation_set(fixture("ertms/multiclass.jsonl"), ertms->corpus);
    double secs = seconds_since(t0);
    bool ok = b.instances.size() == 10859 && b.count(RelationType::None) == 9606 && b.count(RelationType::Related) == 1253 &&
              m.instances.size() == 4432 && m.count(RelationType::None) == 3720 && m.count(RelationType::Requires) == 378 &&
              m.count(RelationType::IsSimilar) == 334 && secs < 5.0;
    report(ok, "dataset-counts",
           "binary " + std::to_string(b.instances.size()) + "/" + std::to_string(b.count(RelationType::None)) + "/" +
               std::to_string(b.count(RelationType::Related)) + ", multiclass " + std::to_string(m.instances.size()) + "/" +
               std::to_string(m.count(RelationType::None)) + "/" + std::to_string(m.count(RelationType::Requires)) + "/" +
               std::to_string(m.count(RelationType::IsSimilar)) + fmt(", load+analyze %.2fs (< 5s)", secs));
  });
  if (!ertms) return 1;

  criterion("pair-enumeration", [&] {
    auto t0 = Clock::now();
    auto pairs = enumerate_candidate_pairs(ertms->corpus, PairMode::kUnordered);
    double secs = seconds_since(t0);
    std::set<PairKey> distinct(pairs.begin(), pairs.end());
    bool ok = ertms->corpus.size() == 190 && pairs.size() == 17955 && distinct.size() == pairs.size() &&
              pairs.size() == 16969u + 307u + 679u && secs < 1.0;
    report(ok, "pair-enumeration", std::to_string(pairs.size()) + " pairs" + fmt(" in %.3fs (< 1s)", secs));
  });

  criterion("metrics-oracle", [&] {
    auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) worst = std::max(worst, metrics_delta(rng));
    double secs = seconds_since(t0);
    report(worst <= 1e-9 && secs < 60.0, "metrics-oracle", fmt("1000 sets, max |delta| %.3g (<= 1e-9), %.2fs (< 60s)", worst, secs));
  });

  criterion("tfidf", [&] {
    std::vector<ParsedRequirement> docs;
    std::vector<std::string> texts = {"brake brake brake train", "brake train", "door train", "light train"};
    for (std::size_t i = 0; i < texts.size(); ++i)
      docs.push_back(preprocess(Requirement{"D" + std::to_string(i), texts[i], "d", static_cast<int>(i), {}}));
    auto m = tfidf_fit(docs);
    auto v = tfidf_vectorize(m, docs[0]);
    double w = v.get(m.vocabulary.at("brake")), z = v.get(m.vocabulary.at("train"));
    RelationSet gold = load_relation_set(fixture("ertms/binary.jsonl"), ertms->corpus);
    double acc = evaluate_predictions(ertms->corpus, gold, {}).accuracy;
    bool ok = std::abs(w - 3.0) <= 1e-12 && z == 0.0 && std::abs(acc - 9606.0 / 10859.0) <= 1e-9;
    report(ok, "tfidf", fmt("w(tf=3,df=2,n=4) %.12f, w(df=n) %g, all-None accuracy %.9f", w, z, acc));
  });

  criterion("average-precision", [&] {
    double a = average_precision(std::vector<int>{1, 0, 1});
    double b = average_precision(std::vector<int>{1, 1, 1, 0, 0, 0});
    report(std::abs(a - 5.0 / 6.0) <= 1e-9 && b == 1.0, "average-precision", fmt("[1,0,1] -> %.12f, positives first -> %.17g", a, b));
  });

  criterion("lsa", [&] {
    Eigen::MatrixXd a = random_matrix(50, 30, 1234);
    oracle::Dense d(50, std::vector<double>(30));
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 30; ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = a(i, j);
    auto want = oracle::singular_values(d);
    LsaModel m = lsa_fit(a, 5);
    double worst = 0;
    for (std::size_t i = 0; i < 5; ++i) worst = std::max(worst, std::abs(m.singular_values[i] - want[i]));
    Eigen::MatrixXd r1 = random_matrix(20, 1, 5) * random_matrix(12, 1, 6).transpose();
    double s2 = lsa_fit(r1, 2).singular_values[1];
    report(worst <= 1e-6 && s2 <= 1e-9, "lsa", fmt("top-5 max |delta| %.3g (<= 1e-6), rank-1 sigma2 %.3g (<= 1e-9)", worst, s2));
  });

  criterion("kmeans", [&] {
    bool monotone = true;
    for (std::uint64_t s = 0; s < 100; ++s) {
      std::mt19937_64 rng(s);
      std::uniform_real_distribution<double> u(-5, 5);
      int n = std::uniform_int_distribution<int>(10, 120)(rng);
      int k = std::uniform_int_distribution<int>(2, 10)(rng);
      Matrix x(static_cast<std::size_t>(n), std::vector<double>(4));
      for (auto& row : x)
        for (auto& v : row) v = u(rng);
      std::vector<std::string> ids;
      for (int i = 0; i < n; ++i) ids.push_back("r" + std::to_string(i));
      auto r = kmeans_cluster(ids, x, k, s);
      for (std::size_t i = 1; i < r.inertia_history.size(); ++i) monotone = monotone && r.inertia_history[i] <= r.inertia_history[i - 1];
      monotone = monotone && std::abs(r.inertia - oracle::inertia(x, r.assignments, k)) <= 1e-9;
    }
    Matrix pts = {{0, 0}, {1, 0}, {0, 1}, {5, 5}, {2, 3}};
    std::vector<std::string> pid = {"a", "b", "c", "d", "e"};
    double kn = kmeans_cluster(pid, pts, 5, 1).inertia;

    std::vector<ParsedRequirement> sample(ertms->analyzed.parses.begin(), ertms->analyzed.parses.begin() + 117);
    auto tf = tfidf_fit(sample);
    auto docs = tfidf_vectorize_all(tf, sample);
    LsaOptions opt;
    opt.seed = 8;
    LsaModel lsa = lsa_fit(document_term_matrix(docs, tf.dimension()), 50, opt);
    Matrix x;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      x.push_back(lsa_project(lsa, docs[i]));
      ids.push_back(sample[i].requirement_id);
    }
    auto c1 = kmeans_cluster(ids, x, 10, 8), c2 = kmeans_cluster(ids, x, 10, 8);
    std::vector<int> sizes(10, 0);
    for (int a : c1.assignments) ++sizes[static_cast<std::size_t>(a)];
    bool nonempty = std::all_of(sizes.begin(), sizes.end(), [](int s) { return s > 0; });
    bool same = c1.assignments == c2.assignments && c1.inertia == c2.inertia;
    report(monotone && kn == 0.0 && nonempty && same && x.size() == 117, "kmeans",
           std::string("100 fixtures monotone=") + (monotone ? "yes" : "no") + fmt(", k=n inertia %g", kn) +
               ", k=10 on 117 items non-empty=" + (nonempty ? "yes" : "no") + ", deterministic=" + (same ? "yes" : "no"));
  });

  criterion("ensemble-wsl-al", [&] {
    auto t0 = Clock::now();
    EnsembleConfig nn = EnsembleConfig::from_json(nlohmann::json::parse(R"({"members":["knn","naive_bayes"],"hyper":{"knn":{"k":1}}})"));
    // Requires outliers inside the None mass: 1-NN and the Gaussian model disagree there.
    std::vector<LabeledExample> seed;
    std::vector<UnlabeledExample> pool;
    for (int i = 0; i < 20; ++i) {
      seed.push_back({key(i), {0.05 * i, 0.1 * (i % 5)}, RelationType::None, Provenance::kGold});
      seed.push_back({key(100 + i), {10.0 + 0.05 * i, 10.0}, RelationType::Requires, Provenance::kGold});
    }
    for (int i = 0; i < 5; ++i) {
      seed.push_back({key(200 + i), {0.2 * i + 0.125, 0.3}, RelationType::Requires, Provenance::kGold});
      pool.push_back({key(300 + i), {0.2 * i + 0.125, 0.31}});
    }
    std::size_t adversarial = wsl_run(seed, pool, nn, 5).predictions.size();

    bool gold_kept = true;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      std::mt19937_64 rng(trial);
      std::normal_distribution<double> g(0.0, 0.6);
      std::vector<LabeledExample> s;
      std::vector<UnlabeledExample> p;
      for (int i = 0; i < 60; ++i) {
        bool pos = i % 2 == 0;
        std::vector<double> x = {(pos ? 3.0 : -3.0) + g(rng), (pos ? 3.0 : -3.0) + g(rng)};
        if (i < 12) s.push_back({key(i), x, pos ? RelationType::Requires : RelationType::None, Provenance::kGold});
        else p.push_back({key(i), x});
      }
      auto r = wsl_run(s, p, EnsembleConfig{}, 4);
      std::set<PairKey> seen;
      for (std::size_t i = 0; i < r.labeled.size(); ++i) {
        gold_kept = gold_kept && seen.insert(r.labeled[i].pair).second;
        if (i < s.size()) gold_kept = gold_kept && r.labeled[i].label == s[i].label && r.labeled[i].provenance == Provenance::kGold;
      }
    }

    bool disjoint = true, oracle_equal = true, completed = true;
    int queried = 0;
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
      std::mt19937_64 rng(trial);
      std::normal_distribution<double> g(0.0, 0.5), wide(0.0, 2.5);
      std::vector<RelationInstance> seeds;
      std::set<PairKey> unlabeled;
      ALSession::FeatureMap features;
      std::map<PairKey, RelationInstance> gold;
      for (int i = 0; i < 60; ++i) {
        bool pos = i % 2 == 0;
        PairKey k = canonical_pair("A" + std::to_string(i), "B" + std::to_string(i));
        std::vector<double> x = {(pos ? 3.0 : -3.0) + g(rng), (pos ? 3.0 : -3.0) + g(rng)};
        if (i % 7 == 3) x = {wide(rng), wide(rng)};
        features[k] = x;
        RelationInstance r{k.target, k.source, pos ? RelationType::Requires : RelationType::None, Provenance::kGold};
        gold[k] = r;
        if (i < 8) seeds.push_back(r);
        else unlabeled.insert(k);
      }
      ALConfig cfg;
      cfg.oracle = OracleKind::kScriptedGold;
      ALSession sess("s", cfg, seeds, unlabeled, features, gold);
      const std::size_t total = seeds.size() + unlabeled.size();
      for (int step = 0; step < 200 && !sess.complete(); ++step) {
        sess.step();
        for (const auto& k : sess.unlabeled()) disjoint = disjoint && !sess.labeled().count(k);
        disjoint = disjoint && sess.labeled().size() + sess.unlabeled().size() == total;
      }
      completed = completed && sess.complete();
      for (const auto& [k, item] : sess.labeled())
        if (item.reason == "oracle_labeled") {
          ++queried;
          oracle_equal = oracle_equal && item.label == gold.at(k).rtype && item.source == gold.at(k).source_id;
        }
    }
    double secs = seconds_since(t0);
    bool ok = adversarial == 0 && gold_kept && disjoint && oracle_equal && completed && secs < 120.0;
    report(ok, "ensemble-wsl-al",
           "adversarial pseudo-labels " + std::to_string(adversarial) + ", gold kept=" + (gold_kept ? "yes" : "no") +
               ", pools disjoint=" + (disjoint ? "yes" : "no") + ", oracle==gold on " + std::to_string(queried) +
               " queries=" + (oracle_equal ? "yes" : "no") + fmt(", %.2fs (< 120s)", secs));
  });

  criterion("ontology", [&] {
    auto figs = relx::test::load_fixture("samples");
    Ontology o = load_ontology(relx::test::data_dir() / "ontology/etcs-mini.json");
    bool s3_details = false;
    for (const auto& p : ontology_match(o, figs->analyzed.parses))
      if (p.source_id == "S3A" && p.target_id == "S3B" && p.rtype == RelationType::Details) s3_details = true;
    auto preds = ontology_match(o, ertms->analyzed.parses);
    std::map<RelationType, int> types;
    for (const auto& p : preds) ++types[p.rtype];
    bool only = true;
    std::string seen;
    for (const auto& [t, n] : types) {
      only = only && (t == RelationType::Requires || t == RelationType::Details || t == RelationType::Conflicts);
      seen += " " + std::string(to_string(t)) + "=" + std::to_string(n);
    }
    report(s3_details && only && !preds.empty(), "ontology", std::string("S3A->S3B details=") + (s3_details ? "yes" : "no") + ", types:" + seen);
  });

  criterion("retrieval-runtime", [&] {
    auto t0 = Clock::now();
    auto l = relx::test::load_fixture("ertms");
    std::size_t n = 0;
    for (std::string m : {"crossref", "pattern", "tfidf"}) n += run_method(l->corpus, l->analyzed, m, nlohmann::json::object(), resources()).size();
    double secs = seconds_since(t0);
    report(secs < 60.0, "retrieval-runtime", std::to_string(n) + fmt(" predictions over 17955 pairs in %.2fs (< 60s)", secs));
  });

  criterion("service-cli-parity", [&] {
    relx::test::TempDir tmp;
    std::string reqs = fixture("ertms/requirements.jsonl").string(), conllu = fixture("ertms/parses.conllu").string();
    bool identical = true;
    std::string sid, state_before, audit_before;
    {
      ServerProcess srv(tmp.path);
      if (srv.port <= 0) throw Error(ErrorKind::kIo, "server did not start");
      auto c = srv.client();
      auto cid = post(c, "/corpora",
                      {{"requirements", read_file(reqs)}, {"conllu", read_file(conllu)},
                       {"gold", read_file(fixture("ertms/multiclass.jsonl"))}})["corpus_id"]
                     .get<std::string>();
      for (std::string method : {"crossref", "pattern", "tfidf", "ontology", "semgraph"}) {
        auto rid = post(c, "/runs", {{"corpus_id", cid}, {"method", method}, {"seed", 11}})["run_id"].get<std::string>();
        for (int i = 0; i < 6000; ++i) {
          auto st = nlohmann::json::parse(get_body(c, "/runs/" + rid)).at("status").get<std::string>();
          if (st == "failed") throw Error(ErrorKind::kIo, method + " run failed");
          if (st == "done") break;
          std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
        std::string http = get_body(c, "/runs/" + rid + "/predictions");
        auto local = relx::test::run_command(std::string(RELX_CLI_PATH) + " extract --method " + method + " --seed 11 --corpus " + reqs +
                                             " --parses " + conllu);
        identical = identical && local.status == 0 && local.out == http && !http.empty();
      }
      nlohmann::json seeds = nlohmann::json::array(), pool = nlohmann::json::array();
      std::ifstream in(fixture("ertms/multiclass.jsonl"));
      std::string line;
      for (int i = 0; i < 300 && std::getline(in, line); ++i) {
        auto j = nlohmann::json::parse(line);
        if (i < 240) seeds.push_back({{"source", j["source"]}, {"target", j["target"]}, {"type", j["type"]}});
        else pool.push_back({j["source"], j["target"]});
      }
      nlohmann::json params = {{"seed_labels", seeds}, {"unlabeled", pool}, {"thresholds", {{"low", 0.99}, {"high", 1.0}}}};
      sid = post(c, "/al/sessions", {{"corpus_id", cid}, {"params", params}})["session_id"].get<std::string>();
      auto q = nlohmann::json::parse(get_body(c, "/al/sessions/" + sid + "/next")).at("query");
      if (q.is_null()) throw Error(ErrorKind::kState, "no query issued");
      post(c, "/al/sessions/" + sid + "/labels",
           {{"source", q["source"]}, {"target", q["target"]}, {"type", "requires"}, {"direction", "source_to_target"}});
      get_body(c, "/al/sessions/" + sid + "/next");
      state_before = get_body(c, "/al/sessions/" + sid);
      audit_before = get_body(c, "/al/sessions/" + sid + "/audit");
    }
    ServerProcess again(tmp.path);
    if (again.port <= 0) throw Error(ErrorKind::kIo, "server did not restart");
    auto c = again.client();
    bool replayed = get_body(c, "/al/sessions/" + sid) == state_before && get_body(c, "/al/sessions/" + sid + "/audit") == audit_before &&
                    audit_before.find("oracle_labeled") != std::string::npos;
    report(identical && replayed, "service-cli-parity",
           std::string("5 methods byte-identical=") + (identical ? "yes" : "no") + ", AL state after restart equal=" + (replayed ? "yes" : "no"));
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}

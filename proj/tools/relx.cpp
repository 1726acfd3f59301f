#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>

#include "relx/service/server.hpp"

#ifndef RELX_DEFAULT_RESOURCES
#define RELX_DEFAULT_RESOURCES ""
#endif

namespace {

using relx::Error;
using relx::ErrorKind;

struct Inputs {
  std::string corpus, parses, gold, csv_mapping, resources;
  bool complete = false;
};

relx::ResourceConfig load_resources(const std::string& flag) {
  std::string path = flag;
  if (path.empty())
    if (const char* env = std::getenv("RELX_RESOURCES")) path = env;
  if (path.empty()) path = RELX_DEFAULT_RESOURCES;
  if (path.empty()) return {};
  return relx::ResourceConfig::load(path);
}

struct Loaded {
  relx::Corpus corpus;
  std::map<std::string, relx::ParsedRequirement> ingested;
  std::optional<relx::RelationSet> gold;
};

Loaded load_inputs(const Inputs& in, const relx::PipelineResources& res) {
  if (in.corpus.empty()) throw Error(ErrorKind::kUsage, "--corpus is required");
  Loaded l;
  std::optional<relx::CsvMapping> mapping;
  if (!in.csv_mapping.empty()) mapping = relx::CsvMapping::from_json(nlohmann::json::parse(relx::read_file(in.csv_mapping)));
  l.corpus = relx::load_requirements(in.corpus, mapping ? relx::RequirementsFormat::kCsvMapped : relx::RequirementsFormat::kJsonl,
                                     mapping);
  if (!in.parses.empty()) l.ingested = relx::ingest_conllu(l.corpus, in.parses, res.preprocess);
  if (!in.gold.empty()) {
    l.gold = relx::load_relation_set(in.gold, l.corpus, mapping);
    l.gold->complete = in.complete;
    for (const auto& w : l.gold->warnings) std::cerr << "warning: " << w << "\n";
  }
  return l;
}

// Inline JSON object or a path to a JSON file.
nlohmann::json params_arg(const std::string& s) {
  if (s.empty()) return nlohmann::json::object();
  std::string text = s.front() == '{' ? s : relx::read_file(s);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, std::string("--params: ") + e.what());
  }
}

void emit(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") std::cout << content;
  else relx::write_file(out, content);
}

void add_inputs(CLI::App* cmd, Inputs& in, bool with_gold) {
  cmd->add_option("--corpus", in.corpus, "Requirements file (JSONL, or CSV with --csv-mapping)")->required();
  cmd->add_option("--parses", in.parses, "CoNLL-U parses keyed by requirement id");
  cmd->add_option("--csv-mapping", in.csv_mapping, "JSON column mapping for CSV inputs");
  if (with_gold) {
    cmd->add_option("--gold", in.gold, "Gold relations (JSONL, or CSV with --csv-mapping)");
    cmd->add_flag("--complete", in.complete, "Treat unlabeled candidate pairs as None");
  }
}

std::atomic<httplib::Server*> g_server{nullptr};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relx: requirement relation extraction"};
  app.require_subcommand(1);
  std::string resources_flag;
  app.add_option("--resources", resources_flag, "Pipeline resource config (JSON)");

  Inputs in;
  std::string out;

  auto* load = app.add_subcommand("load", "Load and validate a corpus, print counts");
  add_inputs(load, in, true);

  auto* ingest = app.add_subcommand("parse-ingest", "Validate CoNLL-U parses against a corpus");
  add_inputs(ingest, in, false);
  ingest->add_option("-o,--out", out, "Write the merged CoNLL-U here");

  std::string method, params;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
  auto* extract = app.add_subcommand("extract", "Run one extraction method, print predictions as JSONL");
  add_inputs(extract, in, false);
  extract->add_option("--method", method, "crossref|pattern|tfidf|embedding|syngraph|semgraph|ontology")->required();
  extract->add_option("--params", params, "Method params: inline JSON or a JSON file");
  extract->add_option("--threshold", threshold, "Similarity/activation threshold");
  extract->add_option("--seed", seed, "Seed (extraction methods are deterministic; kept for the run record)");
  extract->add_option("-o,--out", out, "Output file (default stdout)");

  int k = 10;
  auto* cluster = app.add_subcommand("cluster", "k-means over LSA vectors");
  add_inputs(cluster, in, false);
  cluster->add_option("-k,--k", k, "Number of clusters");
  cluster->add_option("--seed", seed, "Random seed");
  cluster->add_option("--params", params, "Extra params");
  cluster->add_option("-o,--out", out, "Output file");

  std::string classifier = "ensemble";
  int folds = 10;
  auto* train = app.add_subcommand("train", "Cross-validate a classifier on gold pairs, print the metrics report");
  add_inputs(train, in, true);
  train->add_option("--classifier", classifier, "naive_bayes|knn|linear_svm|ensemble");
  train->add_option("--folds", folds, "Number of folds");
  train->add_option("--seed", seed, "Random seed");
  train->add_option("--params", params, "Extra params (recipe, hyper, ensemble)");
  train->add_option("-o,--out", out, "Output file");

  std::string report_out;
  auto* wsl = app.add_subcommand("wsl", "Pseudo-label withheld gold pairs by unanimous ensemble vote");
  add_inputs(wsl, in, true);
  wsl->add_option("--seed", seed, "Random seed");
  wsl->add_option("--params", params, "Params (seed_fraction, max_iters, ensemble, recipe)");
  wsl->add_option("-o,--out", out, "Predictions output");
  wsl->add_option("--report", report_out, "Metrics report output");

  std::string audit_path, resume_path;
  auto* al = app.add_subcommand("al", "Run a scripted-gold active-learning session to completion");
  add_inputs(al, in, true);
  al->add_option("--seed", seed, "Random seed");
  al->add_option("--params", params, "Session params (thresholds, ensemble, seed_fraction, ...)");
  al->add_option("--audit", audit_path, "Append-only audit log (JSONL)");
  al->add_option("--resume", resume_path, "Replay this audit log before continuing");
  int max_steps = 1000;
  al->add_option("--max-steps", max_steps, "Stop after this many steps");
  al->add_option("-o,--out", out, "Final state output");

  std::string predictions, against;
  auto* eval = app.add_subcommand("eval", "Score predictions against gold; optional kappa against a second annotation");
  add_inputs(eval, in, true);
  eval->add_option("--predictions", predictions, "Predictions JSONL");
  eval->add_option("--against", against, "Second annotation (relations JSONL) for Cohen's kappa");
  eval->add_option("-o,--out", out, "Output file");

  std::string data_dir = "relx-data", host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--data-dir", data_dir, "Storage root (or RELX_DATA_DIR)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");

  std::vector<std::string> metrics_files;
  auto* report = app.add_subcommand("report", "Tabulate metrics reports as Markdown");
  report->add_option("metrics", metrics_files, "Metrics JSON files")->required();
  report->add_option("-o,--out", out, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    relx::ResourceConfig res = load_resources(resources_flag);

    if (*serve) {
      if (const char* env = std::getenv("RELX_DATA_DIR"); env && serve->count("--data-dir") == 0) data_dir = env;
      relx::Service service(data_dir, res);
      for (const auto& [sid, why] : service.quarantined()) std::cerr << "quarantined session " << sid << ": " << why << "\n";
      httplib::Server srv;
      service.mount(srv);
      g_server = &srv;
      std::signal(SIGINT, [](int) {
        if (auto* s = g_server.load()) s->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (auto* s = g_server.load()) s->stop();
      });
      int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
      if (bound < 0) throw Error(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
      std::cout << "listening on " << host << ":" << bound << std::endl;
      srv.listen_after_bind();
      g_server = nullptr;
      service.join_workers();
      return 0;
    }

    if (*report) {
      std::string md = "| report | accuracy | macro_f1 | micro_f1 | map | kappa |\n|---|---|---|---|---|---|\n";
      char buf[256];
      for (const auto& f : metrics_files) {
        auto j = nlohmann::json::parse(relx::read_file(f));
        auto num = [&](const char* key) { return j.contains(key) && j.at(key).is_number() ? j.at(key).get<double>() : 0.0; };
        std::string kappa = j.contains("kappa") && j.at("kappa").is_number() ? std::to_string(j.at("kappa").get<double>()) : "-";
        std::snprintf(buf, sizeof buf, "| %s | %.4f | %.4f | %.4f | %.4f | %s |\n", f.c_str(), num("accuracy"), num("macro_f1"),
                      num("micro_f1"), num("map"), kappa.c_str());
        md += buf;
      }
      emit(out, md);
      return 0;
    }

    relx::PipelineResources pipeline = res.build();
    Loaded l = load_inputs(in, pipeline);

    if (*load) {
      nlohmann::json j = {{"requirements", l.corpus.size()}, {"pairs", l.corpus.size() * (l.corpus.size() - 1) / 2},
                          {"gold", l.gold ? relx::relation_counts_json(*l.gold) : nlohmann::json()}};
      std::set<std::string> docs;
      for (const auto& r : l.corpus) docs.insert(r.doc_id);
      j["documents"] = docs.size();
      emit(out, j.dump(2) + "\n");
      return 0;
    }
    if (*ingest) {
      auto merged = relx::merge_parses(l.corpus, l.ingested, pipeline.preprocess);
      if (!out.empty()) {
        std::vector<const relx::ParsedRequirement*> ptrs;
        for (const auto& p : merged)
          if (p.has_arcs()) ptrs.push_back(&p);
        relx::write_file(out, relx::to_conllu(ptrs));
      }
      std::cout << nlohmann::json{{"requirements", l.corpus.size()}, {"parsed", l.ingested.size()},
                                  {"tokenized_only", l.corpus.size() - l.ingested.size()}}
                       .dump(2)
                << "\n";
      return 0;
    }

    relx::AnalyzedCorpus a = relx::analyze(l.corpus, l.ingested, pipeline);
    nlohmann::json p = params_arg(params);
    if (threshold) p["threshold"] = *threshold;

    if (*extract) {
      if (seed) p["seed"] = *seed;
      emit(out, relx::predictions_to_jsonl(relx::run_method(l.corpus, a, method, p, res)));
      return 0;
    }
    if (*cluster) {
      p["k"] = k;
      if (seed) p["seed"] = *seed;
      auto c = relx::run_cluster(a, p);
      nlohmann::json j = relx::clustering_to_json(c.clustering);
      nlohmann::json sug = nlohmann::json::array();
      for (const auto& x : c.suggestions) sug.push_back(nlohmann::json::parse(relx::prediction_to_json(x).dump()));
      j["suggestions"] = sug;
      emit(out, j.dump(2) + "\n");
      return 0;
    }
    if (*train || *wsl || *al || *eval) {
      if (!l.gold) throw Error(ErrorKind::kUsage, "--gold is required");
    }
    if (*train) {
      p["classifier"] = classifier;
      p["folds"] = folds;
      if (seed) p["seed"] = *seed;
      auto t = relx::run_train(l.corpus, a, *l.gold, p, res);
      emit(out, relx::report_to_json(t.report).dump(2) + "\n");
      return 0;
    }
    if (*wsl) {
      if (seed) p["seed"] = *seed;
      auto w = relx::run_wsl(l.corpus, a, *l.gold, p, res);
      emit(out, relx::predictions_to_jsonl(w.result.predictions));
      if (!report_out.empty()) relx::write_file(report_out, relx::report_to_json(w.report).dump(2) + "\n");
      return 0;
    }
    if (*al) {
      if (seed) p["seed"] = *seed;
      p["oracle"] = "scripted_gold";
      relx::ALSession s = relx::make_al_session("cli", l.corpus, a, &*l.gold, p, res);
      if (!resume_path.empty()) s = relx::replay_session(std::move(s), relx::read_file(resume_path), resume_path);
      if (!audit_path.empty()) {
        if (resume_path != audit_path) relx::write_file(audit_path, s.audit_jsonl());
        s.on_event([&](const relx::AuditEvent& e) { relx::DataStore::append_line(audit_path, e.to_json().dump()); });
      }
      for (int i = 0; i < max_steps && !s.complete(); ++i) s.step();
      emit(out, s.state_json().dump(2) + "\n");
      return 0;
    }
    if (*eval) {
      nlohmann::json j;
      if (!predictions.empty()) {
        auto preds = relx::parse_predictions_jsonl(relx::read_file(predictions), &l.corpus, predictions);
        j = nlohmann::json::parse(relx::report_to_json(relx::evaluate_predictions(l.corpus, *l.gold, preds)).dump());
      }
      if (!against.empty()) {
        relx::RelationSet other = relx::load_relation_set(against, l.corpus);
        other.complete = in.complete;
        relx::LabelMap ga, gb;
        for (const auto& x : relx::labeled_pairs(*l.gold, l.corpus)) ga[x.pair] = x.label;
        for (const auto& x : relx::labeled_pairs(other, l.corpus)) gb[x.pair] = x.label;
        auto kr = relx::cohens_kappa(ga, gb);
        j["kappa"] = kr.kappa;
        j["kappa_detail"] = {{"p_o", kr.p_o}, {"p_e", kr.p_e}, {"degenerate", kr.degenerate}};
      }
      if (j.is_null()) throw Error(ErrorKind::kUsage, "eval needs --predictions and/or --against");
      emit(out, j.dump(2) + "\n");
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kUsage ? 2 : 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "relx/corpus/corpus.hpp"
#include "relx/corpus/relations.hpp"
#include "relx/nlp/conllu.hpp"
#include "relx/util.hpp"

namespace relx {

// A corpus as persisted by the store: requirements, optional ingested
// parses and optional gold relations.
struct StoredCorpus {
  std::string id;
  Corpus corpus;
  std::string conllu;  // raw CoNLL-U, empty when none was ingested
  std::optional<RelationSet> gold;

  std::map<std::string, ParsedRequirement> ingested(const PreprocessConfig& config) const {
    if (conllu.empty()) return {};
    return parse_conllu(conllu, corpus, config, id + "/parses.conllu");
  }
};

// Content-addressed corpus id: same requirements, same id.
inline std::string corpus_id_of(const Corpus& c) { return "c" + hex64(fnv1a(requirements_to_jsonl(c))).substr(0, 12); }

// File layout under the root:
//   corpora/<id>/{requirements.jsonl, parses.conllu, gold.jsonl}
//   runs/<id>/{run.json, predictions.jsonl, metrics.json}
//   al/<id>/{session.json, audit.jsonl, state.json}
//   idempotency/<hash>.json
class DataStore {
 public:
  explicit DataStore(std::filesystem::path root) : root_(std::move(root)) {
    for (const char* d : {"corpora", "runs", "al", "idempotency"}) std::filesystem::create_directories(root_ / d);
  }

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path corpus_dir(const std::string& id) const { return root_ / "corpora" / checked(id); }
  std::filesystem::path run_dir(const std::string& id) const { return root_ / "runs" / checked(id); }
  std::filesystem::path session_dir(const std::string& id) const { return root_ / "al" / checked(id); }

  std::string save_corpus(const Corpus& c) {
    std::string id = corpus_id_of(c);
    auto dir = corpus_dir(id);
    std::filesystem::create_directories(dir);
    write_atomic(dir / "requirements.jsonl", requirements_to_jsonl(c));
    return id;
  }

  void save_parses(const std::string& id, const std::string& conllu) { write_atomic(existing_corpus(id) / "parses.conllu", conllu); }
  void save_gold(const std::string& id, const RelationSet& gold) {
    auto dir = existing_corpus(id);
    write_atomic(dir / "gold.jsonl", relation_set_to_jsonl(gold));
    write_atomic(dir / "gold.meta.json", nlohmann::json{{"complete", gold.complete}}.dump());
  }

  bool has_corpus(const std::string& id) const { return valid_id(id) && std::filesystem::exists(corpus_dir(id) / "requirements.jsonl"); }

  StoredCorpus load_corpus(const std::string& id) const {
    auto dir = existing_corpus(id);
    StoredCorpus s;
    s.id = id;
    s.corpus = parse_requirements_jsonl(read_file(dir / "requirements.jsonl"), (dir / "requirements.jsonl").string());
    if (std::filesystem::exists(dir / "parses.conllu")) s.conllu = read_file(dir / "parses.conllu");
    if (std::filesystem::exists(dir / "gold.jsonl")) {
      RelationSet g = parse_relation_set_jsonl(read_file(dir / "gold.jsonl"), s.corpus, (dir / "gold.jsonl").string());
      if (std::filesystem::exists(dir / "gold.meta.json"))
        g.complete = nlohmann::json::parse(read_file(dir / "gold.meta.json")).value("complete", false);
      s.gold = std::move(g);
    }
    return s;
  }

  std::vector<std::string> list(const std::string& kind) const {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(root_ / kind))
      if (e.is_directory() && valid_id(e.path().filename().string())) out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
  }

  std::string next_id(const std::string& kind, const std::string& prefix) {
    std::lock_guard<std::mutex> lock(mu_);
    int n = static_cast<int>(list(kind).size()) + 1;
    for (;; ++n) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%06d", prefix.c_str(), n);
      auto dir = root_ / kind / buf;
      if (std::filesystem::create_directory(dir)) return buf;
    }
  }

  std::optional<nlohmann::json> idempotent_response(const std::string& key) const {
    auto p = idem_path(key);
    if (!std::filesystem::exists(p)) return std::nullopt;
    return nlohmann::json::parse(read_file(p));
  }
  void remember_response(const std::string& key, int status, const std::string& body, const std::string& content_type) {
    write_atomic(idem_path(key), nlohmann::json{{"status", status}, {"body", body}, {"content_type", content_type}}.dump());
  }

  static void write_atomic(const std::filesystem::path& p, std::string_view content) {
    auto tmp = p;
    tmp += ".tmp";
    write_file(tmp, content);
    std::filesystem::rename(tmp, p);
  }

  static void append_line(const std::filesystem::path& p, const std::string& line) {
    std::ofstream out(p, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorKind::kIo, "cannot append to " + p.string());
    out << line << '\n';
    out.flush();
  }

  static bool valid_id(const std::string& id) {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'; });
  }

 private:
  static const std::string& checked(const std::string& id) {
    if (!valid_id(id)) throw Error(ErrorKind::kNotFound, "invalid id '" + id + "'");
    return id;
  }
  std::filesystem::path existing_corpus(const std::string& id) const {
    if (!has_corpus(id)) throw Error(ErrorKind::kNotFound, "unknown corpus '" + id + "'");
    return corpus_dir(id);
  }
  std::filesystem::path idem_path(const std::string& key) const { return root_ / "idempotency" / (hex64(fnv1a(key)) + ".json"); }

  std::filesystem::path root_;
  std::mutex mu_;
};

}  // namespace relx

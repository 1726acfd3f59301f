#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>

#include "relx/corpus/corpus.hpp"
#include "relx/corpus/relations.hpp"
#include "relx/nlp/pipeline.hpp"
#include "relx/service/methods.hpp"

namespace relx::test {

inline std::filesystem::path source_dir() { return RELX_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return source_dir() / "data"; }
inline std::filesystem::path fixture(const std::string& rel) { return source_dir() / "tests" / "data" / rel; }

inline const ResourceConfig& resources() {
  static const ResourceConfig r = ResourceConfig::load(data_dir() / "pipeline.json");
  return r;
}

struct Loaded {
  Corpus corpus;
  AnalyzedCorpus analyzed;
};

inline std::unique_ptr<Loaded> load_fixture(const std::string& dir) {
  auto l = std::make_unique<Loaded>();
  l->corpus = load_requirements(fixture(dir + "/requirements.jsonl"));
  PipelineResources res = resources().build();
  l->analyzed = analyze(l->corpus, ingest_conllu(l->corpus, fixture(dir + "/parses.conllu"), res.preprocess), res);
  return l;
}

inline const Loaded& ertms() {
  static const std::unique_ptr<Loaded> l = load_fixture("ertms");
  return *l;
}

inline const Loaded& samples() {
  static const std::unique_ptr<Loaded> l = load_fixture("samples");
  return *l;
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    char tmpl[] = "/tmp/relx-test-XXXXXX";
    path = mkdtemp(tmpl);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

struct CommandResult {
  int status = -1;
  std::string out;
};

inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* p = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

}  // namespace relx::test

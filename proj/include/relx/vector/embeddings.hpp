#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "relx/error.hpp"
#include "relx/nlp/parsed.hpp"
#include "relx/util.hpp"
#include "relx/vector/sparse.hpp"

namespace relx {

struct EmbeddingTable {
  int dimension = 0;
  std::map<std::string, std::vector<double>> vectors;
  std::vector<std::string> warnings;

  const std::vector<double>* find(const std::string& token) const {
    auto it = vectors.find(token);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

// Text format: "token v1 ... vd" per line, whitespace separated.
inline EmbeddingTable parse_embeddings(std::string_view content, const std::string& source = "<embeddings>") {
  EmbeddingTable table;
  auto lines = lines_of(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto f = split_ws(lines[i]);
    if (f.empty()) continue;
    int d = static_cast<int>(f.size()) - 1;
    if (d < 1) throw line_error(ErrorKind::kParse, source, i + 1, "token '" + f[0] + "' has no vector components");
    if (table.dimension == 0) table.dimension = d;
    if (d != table.dimension)
      throw line_error(ErrorKind::kDimension, source, i + 1,
                       "expected " + std::to_string(table.dimension) + " components, got " + std::to_string(d));
    std::vector<double> v(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      const std::string& s = f[static_cast<std::size_t>(k + 1)];
      char* end = nullptr;
      v[static_cast<std::size_t>(k)] = std::strtod(s.c_str(), &end);
      if (end == s.c_str() || *end != '\0' || !std::isfinite(v[static_cast<std::size_t>(k)]))
        throw line_error(ErrorKind::kParse, source, i + 1, "non-numeric component '" + s + "'");
    }
    if (table.vectors.count(f[0]))
      table.warnings.push_back(source + ":" + std::to_string(i + 1) + ": duplicate token '" + f[0] + "', last wins");
    table.vectors[f[0]] = std::move(v);
  }
  if (table.dimension == 0) throw Error(ErrorKind::kParse, source + ": no embedding vectors (dimension unknown)");
  return table;
}

inline EmbeddingTable load_embeddings(const std::filesystem::path& path) { return parse_embeddings(read_file(path), path.string()); }

// Components written with 9 significant digits.
inline std::string serialize_embeddings(const EmbeddingTable& table) {
  std::string out;
  char buf[40];
  for (const auto& [tok, v] : table.vectors) {
    out += tok;
    for (double x : v) {
      std::snprintf(buf, sizeof buf, " %.9g", x);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

struct DocumentEmbedding {
  std::vector<double> vector;
  bool all_oov = false;
  int in_vocabulary = 0;
};

// Mean of the vectors of filtered in-vocabulary tokens. Lookup tries the
// filtered term first, then the case-folded surface.
inline DocumentEmbedding embed_requirement(const EmbeddingTable& table, const ParsedRequirement& parsed, const TokenFilter& filter = {}) {
  DocumentEmbedding e;
  e.vector.assign(static_cast<std::size_t>(table.dimension), 0.0);
  for (const auto& t : parsed.tokens) {
    std::string term = filter.term(t);
    if (term.empty()) continue;
    const auto* v = table.find(term);
    if (!v) v = table.find(to_lower(t.surface));
    if (!v) continue;
    for (std::size_t k = 0; k < v->size(); ++k) e.vector[k] += (*v)[k];
    ++e.in_vocabulary;
  }
  if (e.in_vocabulary == 0) {
    e.all_oov = true;
    return e;
  }
  for (double& x : e.vector) x /= e.in_vocabulary;
  return e;
}

}  // namespace relx

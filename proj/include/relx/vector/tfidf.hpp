#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "relx/error.hpp"
#include "relx/nlp/parsed.hpp"
#include "relx/vector/sparse.hpp"

namespace relx {

// weight(t, r) = TF(t, r) * log2(n / n_t), TF the raw in-document count.
struct TfidfModel {
  std::map<std::string, int> vocabulary;  // term -> column, columns in term order
  std::map<std::string, int> document_frequency;
  int n = 0;
  bool sublinear = false;  // TF -> 1 + log2(TF)
  TokenFilter filter;

  std::size_t dimension() const { return vocabulary.size(); }

  double idf(const std::string& term) const {
    auto it = document_frequency.find(term);
    if (it == document_frequency.end()) return 0.0;
    return std::log2(static_cast<double>(n) / static_cast<double>(it->second));
  }

  std::vector<std::string> terms() const {
    std::vector<std::string> out(vocabulary.size());
    for (const auto& [t, i] : vocabulary) out[static_cast<std::size_t>(i)] = t;
    return out;
  }
};

inline TfidfModel tfidf_fit(const std::vector<ParsedRequirement>& parses, const TokenFilter& filter = {}, bool sublinear = false) {
  if (parses.empty()) throw Error(ErrorKind::kEmptyCorpus, "cannot fit TF-IDF on an empty corpus");
  TfidfModel m;
  m.n = static_cast<int>(parses.size());
  m.sublinear = sublinear;
  m.filter = filter;
  for (const auto& p : parses) {
    auto terms = filter.terms(p);
    std::set<std::string> distinct(terms.begin(), terms.end());
    for (const auto& t : distinct) ++m.document_frequency[t];
  }
  int col = 0;
  for (const auto& [t, df] : m.document_frequency) m.vocabulary[t] = col++;
  return m;
}

inline SparseVector tfidf_vectorize(const TfidfModel& model, const ParsedRequirement& parsed) {
  std::map<std::string, int> counts;
  for (const auto& t : model.filter.terms(parsed)) ++counts[t];
  std::map<int, double> w;
  for (const auto& [term, c] : counts) {
    auto it = model.vocabulary.find(term);
    if (it == model.vocabulary.end()) continue;
    double tf = model.sublinear ? 1.0 + std::log2(static_cast<double>(c)) : static_cast<double>(c);
    double v = tf * model.idf(term);
    if (v != 0.0) w[it->second] = v;
  }
  return SparseVector::from_map(w);
}

inline std::vector<SparseVector> tfidf_vectorize_all(const TfidfModel& model, const std::vector<ParsedRequirement>& parses) {
  std::vector<SparseVector> out;
  out.reserve(parses.size());
  for (const auto& p : parses) out.push_back(tfidf_vectorize(model, p));
  return out;
}

}  // namespace relx

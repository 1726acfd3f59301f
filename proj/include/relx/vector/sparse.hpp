#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "relx/nlp/parsed.hpp"
#include "relx/util.hpp"

namespace relx {

// Which tokens count as terms for vectorization.
struct TokenFilter {
  bool drop_stopwords = true;
  bool use_lemmas = true;
  int min_token_len = 1;

  static TokenFilter from_json(const nlohmann::json& j) {
    TokenFilter f;
    f.drop_stopwords = j.value("drop_stopwords", true);
    f.use_lemmas = j.value("use_lemmas", true);
    f.min_token_len = j.value("min_token_len", 1);
    return f;
  }

  nlohmann::json to_json() const {
    return {{"drop_stopwords", drop_stopwords}, {"use_lemmas", use_lemmas}, {"min_token_len", min_token_len}};
  }

  // Term for a token, or empty when filtered out. Punctuation never passes.
  std::string term(const Token& t) const {
    if (drop_stopwords && t.is_stopword) return {};
    if (!has_alnum(t.surface)) return {};
    const std::string& form = use_lemmas && !t.lemma.empty() ? t.lemma : (t.normalized.empty() ? t.surface : t.normalized);
    if (static_cast<int>(form.size()) < min_token_len) return {};
    return form;
  }

  std::vector<std::string> terms(const ParsedRequirement& p) const {
    std::vector<std::string> out;
    for (const auto& t : p.tokens)
      if (auto w = term(t); !w.empty()) out.push_back(std::move(w));
    return out;
  }
};

// Sorted (index, weight) entries without explicit zeros.
class SparseVector {
 public:
  SparseVector() = default;

  static SparseVector from_map(const std::map<int, double>& m) {
    SparseVector v;
    for (auto [i, w] : m)
      if (w != 0.0) v.entries_.push_back({i, w});
    return v;
  }

  const std::vector<std::pair<int, double>>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t nnz() const { return entries_.size(); }

  double get(int index) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), index, [](const auto& e, int i) { return e.first < i; });
    return it != entries_.end() && it->first == index ? it->second : 0.0;
  }

  double dot(const SparseVector& o) const {
    double s = 0;
    auto a = entries_.begin(), b = o.entries_.begin();
    while (a != entries_.end() && b != o.entries_.end()) {
      if (a->first < b->first) ++a;
      else if (b->first < a->first) ++b;
      else s += (a++)->second * (b++)->second;
    }
    return s;
  }

  double norm() const { return std::sqrt(dot(*this)); }

  std::vector<double> to_dense(std::size_t dim) const {
    std::vector<double> d(dim, 0.0);
    for (auto [i, w] : entries_) d[static_cast<std::size_t>(i)] = w;
    return d;
  }

 private:
  std::vector<std::pair<int, double>> entries_;
};

}  // namespace relx

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "relx/corpus/types.hpp"
#include "relx/error.hpp"
#include "relx/retrieval/prediction.hpp"

namespace relx {

using LabelMap = std::map<PairKey, RelationType>;

struct ConfusionMatrix {
  std::vector<RelationType> classes;
  std::vector<std::vector<long>> counts;  // rows gold, columns predicted

  std::size_t index(RelationType t) const {
    auto it = std::find(classes.begin(), classes.end(), t);
    if (it == classes.end()) throw Error(ErrorKind::kUnknownLabel, "class '" + std::string(to_string(t)) + "' not declared");
    return static_cast<std::size_t>(it - classes.begin());
  }
  long at(RelationType gold, RelationType pred) const { return counts[index(gold)][index(pred)]; }
  long total() const {
    long s = 0;
    for (const auto& r : counts)
      for (long c : r) s += c;
    return s;
  }
  long trace() const {
    long s = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) s += counts[i][i];
    return s;
  }
};

// Universe = gold keys; a pair without prediction counts as None. Predicted
// pairs outside the universe are ignored.
inline ConfusionMatrix confusion(const LabelMap& gold, const LabelMap& predicted, std::vector<RelationType> classes) {
  ConfusionMatrix m;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  m.classes = classes;
  m.counts.assign(classes.size(), std::vector<long>(classes.size(), 0));
  for (const auto& [pair, g] : gold) {
    auto it = predicted.find(pair);
    RelationType p = it == predicted.end() ? RelationType::None : it->second;
    ++m.counts[m.index(g)][m.index(p)];
  }
  return m;
}

// Sorted union of gold and predicted types, always including None.
inline std::vector<RelationType> classes_of(const LabelMap& gold, const LabelMap& predicted) {
  std::set<RelationType> s{RelationType::None};
  for (const auto& [k, t] : gold) s.insert(t);
  for (const auto& [k, t] : predicted)
    if (gold.count(k)) s.insert(t);
  return {s.begin(), s.end()};
}

struct Prf {
  double precision = 0, recall = 0, f1 = 0;
  long support = 0;
};

// Zero denominators give 0; f1 = 0 when p + r = 0.
inline Prf precision_recall_f1(const ConfusionMatrix& m, RelationType cls) {
  std::size_t c = m.index(cls);
  long tp = m.counts[c][c], pred = 0, gold = 0;
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    pred += m.counts[i][c];
    gold += m.counts[c][i];
  }
  Prf r;
  r.support = gold;
  r.precision = pred == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pred);
  r.recall = gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold);
  r.f1 = r.precision + r.recall == 0 ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

inline double accuracy(const ConfusionMatrix& m) {
  long t = m.total();
  return t == 0 ? 0.0 : static_cast<double>(m.trace()) / static_cast<double>(t);
}

inline double macro_f1(const ConfusionMatrix& m) {
  if (m.classes.empty()) return 0.0;
  double s = 0;
  for (auto c : m.classes) s += precision_recall_f1(m, c).f1;
  return s / static_cast<double>(m.classes.size());
}

// Micro-averaged F1 over single-label predictions (equals accuracy).
inline double micro_f1(const ConfusionMatrix& m) {
  long tp = m.trace(), t = m.total();
  return t == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(t);
}

struct RankedItem {
  PairKey pair;
  double score = 0;
};

// Sorted by (score desc, pair asc).
inline void rank(std::vector<RankedItem>& items) {
  std::sort(items.begin(), items.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.pair < b.pair;
  });
}

struct ApResult {
  double ap = 0.0;
  bool no_positives = false;
};

// AP = sum_n (R_n - R_{n-1}) * P_n over the ranking.
inline ApResult average_precision(std::vector<RankedItem> ranked, const LabelMap& gold, RelationType positive) {
  rank(ranked);
  long positives = 0;
  for (const auto& it : ranked) {
    auto g = gold.find(it.pair);
    positives += g != gold.end() && g->second == positive;
  }
  if (positives == 0) return {0.0, true};
  double ap = 0, prev_r = 0;
  long tp = 0;
  for (std::size_t n = 0; n < ranked.size(); ++n) {
    auto g = gold.find(ranked[n].pair);
    if (g != gold.end() && g->second == positive) ++tp;
    double r = static_cast<double>(tp) / static_cast<double>(positives);
    double p = static_cast<double>(tp) / static_cast<double>(n + 1);
    ap += (r - prev_r) * p;
    prev_r = r;
  }
  return {ap, false};
}

// AP from a 0/1 relevance sequence already in rank order.
inline double average_precision(const std::vector<int>& relevance) {
  long positives = std::count(relevance.begin(), relevance.end(), 1);
  if (positives == 0) return 0.0;
  double ap = 0, prev_r = 0;
  long tp = 0;
  for (std::size_t n = 0; n < relevance.size(); ++n) {
    tp += relevance[n] == 1;
    double r = static_cast<double>(tp) / static_cast<double>(positives);
    ap += (r - prev_r) * static_cast<double>(tp) / static_cast<double>(n + 1);
    prev_r = r;
  }
  return ap;
}

inline double mean_average_precision(const std::map<RelationType, double>& per_class) {
  if (per_class.empty()) return 0.0;
  double s = 0;
  for (const auto& [c, ap] : per_class) s += ap;
  return s / static_cast<double>(per_class.size());
}

// Per-class rankings over the gold universe from single-label decisions: a
// pair scores its confidence for the predicted class and 0 otherwise; pairs
// without prediction are None with confidence 1.
inline std::map<RelationType, std::vector<RankedItem>> class_rankings(const LabelMap& gold,
                                                                      const std::map<PairKey, std::pair<RelationType, double>>& decided,
                                                                      const std::vector<RelationType>& classes) {
  std::map<RelationType, std::vector<RankedItem>> out;
  for (auto c : classes) out[c];
  for (const auto& [pair, g] : gold) {
    auto it = decided.find(pair);
    RelationType p = it == decided.end() ? RelationType::None : it->second.first;
    double conf = it == decided.end() ? 1.0 : it->second.second;
    for (auto c : classes) out[c].push_back({pair, c == p ? conf : 0.0});
  }
  return out;
}

struct KappaResult {
  double kappa = 0.0;
  double p_o = 0.0;
  double p_e = 0.0;
  bool degenerate = false;
};

// Chance agreement from marginal products. p_e = 1 gives 1 when p_o = 1,
// else 0, flagged degenerate.
inline KappaResult cohens_kappa(const LabelMap& a, const LabelMap& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::kConflict, "annotation sets cover different pair universes");
  KappaResult r;
  if (a.empty()) {
    r.degenerate = true;
    return r;
  }
  std::map<RelationType, double> ma, mb;
  long agree = 0;
  for (const auto& [pair, la] : a) {
    auto it = b.find(pair);
    if (it == b.end()) throw Error(ErrorKind::kConflict, "pair " + pair.str() + " missing from second annotation set");
    agree += la == it->second;
    ma[la] += 1;
    mb[it->second] += 1;
  }
  const double n = static_cast<double>(a.size());
  r.p_o = static_cast<double>(agree) / n;
  for (const auto& [c, v] : ma)
    if (auto it = mb.find(c); it != mb.end()) r.p_e += (v / n) * (it->second / n);
  if (r.p_e >= 1.0) {
    r.degenerate = true;
    r.kappa = r.p_o >= 1.0 ? 1.0 : 0.0;
    return r;
  }
  r.kappa = (r.p_o - r.p_e) / (1.0 - r.p_e);
  return r;
}

struct MetricsReport {
  ConfusionMatrix matrix;
  std::map<RelationType, Prf> per_class;
  double accuracy = 0, macro_f1 = 0, micro_f1 = 0;
  std::map<RelationType, ApResult> ap;
  double map = 0;
  std::optional<double> kappa;
  std::map<std::string, double> timings_ms;
  nlohmann::json run = nlohmann::json::object();
  nlohmann::json folds = nlohmann::json();
};

inline MetricsReport evaluate(const LabelMap& gold, const std::map<PairKey, std::pair<RelationType, double>>& decided,
                              std::vector<RelationType> classes = {}) {
  LabelMap predicted;
  for (const auto& [k, v] : decided) predicted[k] = v.first;
  if (classes.empty()) classes = classes_of(gold, predicted);
  MetricsReport r;
  r.matrix = confusion(gold, predicted, classes);
  for (auto c : r.matrix.classes) r.per_class[c] = precision_recall_f1(r.matrix, c);
  r.accuracy = accuracy(r.matrix);
  r.macro_f1 = relx::macro_f1(r.matrix);
  r.micro_f1 = relx::micro_f1(r.matrix);
  std::map<RelationType, double> aps;
  for (auto& [c, items] : class_rankings(gold, decided, r.matrix.classes)) {
    r.ap[c] = average_precision(items, gold, c);
    aps[c] = r.ap[c].ap;
  }
  r.map = mean_average_precision(aps);
  return r;
}

// Single decision per pair from a prediction list (highest confidence).
inline std::map<PairKey, std::pair<RelationType, double>> decisions_of(const std::vector<RelationPrediction>& preds) {
  std::map<PairKey, std::pair<RelationType, double>> out;
  for (const auto& [k, p] : best_per_pair(preds)) out[k] = {p->rtype, p->confidence};
  return out;
}

inline nlohmann::ordered_json report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  std::vector<std::string> cls;
  for (auto c : r.matrix.classes) cls.emplace_back(to_string(c));
  j["classes"] = cls;
  j["confusion"] = r.matrix.counts;
  nlohmann::ordered_json pc = nlohmann::ordered_json::object();
  for (const auto& [c, p] : r.per_class)
    pc[std::string(to_string(c))] = {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}, {"support", p.support},
                                     {"ap", r.ap.count(c) ? r.ap.at(c).ap : 0.0},
                                     {"ap_no_positives", r.ap.count(c) ? r.ap.at(c).no_positives : true}};
  j["per_class"] = pc;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  j["micro_f1"] = r.micro_f1;
  j["map"] = r.map;
  j["kappa"] = r.kappa ? nlohmann::ordered_json(*r.kappa) : nlohmann::ordered_json();
  j["timings_ms"] = r.timings_ms;
  j["run"] = nlohmann::ordered_json::parse(r.run.dump());
  if (!r.folds.is_null()) j["folds"] = nlohmann::ordered_json::parse(r.folds.dump());
  return j;
}

}  // namespace relx

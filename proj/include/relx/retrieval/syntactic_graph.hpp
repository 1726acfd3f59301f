#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "relx/nlp/parsed.hpp"
#include "relx/retrieval/patterns.hpp"
#include "relx/retrieval/prediction.hpp"

namespace relx {

struct SyntacticEdge {
  std::string head_lemma;
  std::string child_lemma;
  std::string dep_label;
  auto operator<=>(const SyntacticEdge&) const = default;
  bool operator==(const SyntacticEdge&) const = default;
};

// Emitted when an inserted requirement adds an edge whose child lemma is
// watched.
struct GraphMatchEvent {
  std::string requirement_id;
  SyntacticEdge edge;
  std::vector<std::string> sharing;  // earlier requirements with the same edge
};

// Weighted directed graph over lemmas; weight = log2(1 + occurrences).
class SyntacticGraph {
 public:
  void watch(const std::string& lemma) { watched_.insert(to_lower(lemma)); }
  const std::set<std::string>& watched() const { return watched_; }

  std::vector<GraphMatchEvent> insert(const ParsedRequirement& p) {
    std::vector<GraphMatchEvent> events;
    std::set<SyntacticEdge> local;
    for (const auto& arc : p.arcs) {
      if (arc.is_root()) continue;
      SyntacticEdge e{p.tokens[static_cast<std::size_t>(arc.head_index)].lemma,
                      p.tokens[static_cast<std::size_t>(arc.child_index)].lemma, arc.dep_label};
      nodes_.insert(e.head_lemma);
      nodes_.insert(e.child_lemma);
      ++counts_[e];
      if (!local.insert(e).second) continue;
      auto& owners = owners_[e];
      if (watched_.count(e.child_lemma))
        events.push_back({p.requirement_id, e, std::vector<std::string>(owners.begin(), owners.end())});
      owners.insert(p.requirement_id);
    }
    return events;
  }

  double weight(const SyntacticEdge& e) const {
    auto it = counts_.find(e);
    return it == counts_.end() ? 0.0 : std::log2(1.0 + static_cast<double>(it->second));
  }
  int count(const SyntacticEdge& e) const {
    auto it = counts_.find(e);
    return it == counts_.end() ? 0 : it->second;
  }
  const std::map<SyntacticEdge, int>& edges() const { return counts_; }
  const std::set<std::string>& nodes() const { return nodes_; }
  const std::set<std::string>& owners(const SyntacticEdge& e) const {
    static const std::set<std::string> kNone;
    auto it = owners_.find(e);
    return it == owners_.end() ? kNone : it->second;
  }

 private:
  std::set<std::string> nodes_;
  std::map<SyntacticEdge, int> counts_;
  std::map<SyntacticEdge, std::set<std::string>> owners_;
  std::set<std::string> watched_;
};

inline SyntacticGraph build_syntactic_graph(const std::vector<ParsedRequirement>& parses) {
  SyntacticGraph g;
  for (const auto& p : parses) g.insert(p);
  return g;
}

// Pairs the new requirement with earlier requirements that share an edge
// touching a rule keyword (head or child lemma). Confidence grows with the
// summed weight of shared edges, saturating at 3.
inline std::vector<RelationPrediction> graph_match(SyntacticGraph& graph, const std::vector<PatternRule>& rules,
                                                   const ParsedRequirement& new_parse) {
  std::map<std::string, const PatternRule*> by_keyword;
  for (const auto& r : rules)
    for (const auto& k : r.keywords) {
      by_keyword.emplace(k, &r);
      graph.watch(k);
    }
  std::set<SyntacticEdge> edges;
  for (const auto& arc : new_parse.arcs)
    if (!arc.is_root())
      edges.insert({new_parse.tokens[static_cast<std::size_t>(arc.head_index)].lemma,
                    new_parse.tokens[static_cast<std::size_t>(arc.child_index)].lemma, arc.dep_label});
  struct Acc {
    double weight = 0;
    std::set<std::string> rules;
    std::vector<std::string> edges;
    RelationType rtype = RelationType::IsSimilar;
  };
  std::map<std::string, Acc> per_other;
  for (const auto& e : edges) {
    const PatternRule* rule = nullptr;
    if (auto it = by_keyword.find(e.child_lemma); it != by_keyword.end()) rule = it->second;
    else if (auto it2 = by_keyword.find(e.head_lemma); it2 != by_keyword.end()) rule = it2->second;
    if (!rule) continue;
    for (const auto& other : graph.owners(e)) {
      if (other == new_parse.requirement_id) continue;
      Acc& acc = per_other[other];
      if (acc.rules.empty()) acc.rtype = rule->rtype;
      acc.rules.insert(rule->id);
      acc.weight += graph.weight(e);
      acc.edges.push_back(e.head_lemma + " -" + e.dep_label + "-> " + e.child_lemma);
    }
  }
  graph.insert(new_parse);
  std::vector<RelationPrediction> out;
  for (const auto& [other, acc] : per_other) {
    nlohmann::json ev = {{"rules", std::vector<std::string>(acc.rules.begin(), acc.rules.end())}, {"edges", acc.edges},
                         {"weight", acc.weight}};
    out.push_back(make_prediction(new_parse.requirement_id, other, acc.rtype, std::min(1.0, acc.weight / 3.0), "syngraph", ev));
  }
  sort_predictions(out);
  return out;
}

// Corpus-wide run: requirements are inserted in order and each insertion is
// matched against the graph built so far.
inline std::vector<RelationPrediction> syngraph_relate(const std::vector<ParsedRequirement>& parses,
                                                       const std::vector<PatternRule>& rules) {
  SyntacticGraph g;
  std::vector<RelationPrediction> out;
  for (const auto& p : parses) {
    auto preds = graph_match(g, rules, p);
    out.insert(out.end(), preds.begin(), preds.end());
  }
  sort_predictions(out);
  return out;
}

}  // namespace relx

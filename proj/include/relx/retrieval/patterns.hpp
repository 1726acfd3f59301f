#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relx/nlp/pipeline.hpp"
#include "relx/nlp/pos.hpp"
#include "relx/retrieval/prediction.hpp"

namespace relx {

enum class DirectionHint { kSourceToTarget, kTargetToSource, kUndirected };

struct DepPattern {
  std::string head_pos;  // "*" matches any tag
  std::string dep_label;
  std::string child_pos;
};

struct PatternRule {
  std::string id;
  std::vector<std::string> keywords;  // lemmas
  bool require_root = false;
  std::vector<DepPattern> dep_patterns;
  RelationType rtype = RelationType::Requires;
  DirectionHint direction_hint = DirectionHint::kSourceToTarget;
};

inline PatternRule pattern_rule_from_json(const nlohmann::json& j) {
  PatternRule r;
  r.id = j.at("id").get<std::string>();
  if (j.contains("keywords"))
    for (const auto& k : j.at("keywords")) r.keywords.push_back(to_lower(k.get<std::string>()));
  r.require_root = j.value("require_root", false);
  auto check_pos = [&](const std::string& tag) {
    if (tag != "*" && !is_universal_pos(tag))
      throw Error(ErrorKind::kConfig, "rule '" + r.id + "' references unknown PoS label '" + tag + "'");
    return tag;
  };
  if (j.contains("dep_patterns")) {
    for (const auto& d : j.at("dep_patterns")) {
      DepPattern p;
      if (d.is_array()) {
        if (d.size() != 3) throw Error(ErrorKind::kConfig, "rule '" + r.id + "': dep pattern needs 3 elements");
        p = {check_pos(d[0].get<std::string>()), d[1].get<std::string>(), check_pos(d[2].get<std::string>())};
      } else {
        p = {check_pos(d.at("head_pos").get<std::string>()), d.at("dep_label").get<std::string>(),
             check_pos(d.at("child_pos").get<std::string>())};
      }
      r.dep_patterns.push_back(std::move(p));
    }
  }
  if (r.keywords.empty() && r.dep_patterns.empty())
    throw Error(ErrorKind::kConfig, "rule '" + r.id + "' has neither keywords nor dep_patterns");
  r.rtype = relation_type_from(j.value("rtype", j.value("type", std::string("requires"))));
  std::string hint = j.value("direction_hint", std::string("source_to_target"));
  if (hint == "source_to_target") r.direction_hint = DirectionHint::kSourceToTarget;
  else if (hint == "target_to_source") r.direction_hint = DirectionHint::kTargetToSource;
  else if (hint == "undirected") r.direction_hint = DirectionHint::kUndirected;
  else throw Error(ErrorKind::kConfig, "rule '" + r.id + "': unknown direction_hint '" + hint + "'");
  return r;
}

inline std::vector<PatternRule> parse_pattern_rules(std::string_view content, const std::string& source = "<rules>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, source + ": " + e.what());
  }
  if (!j.is_array()) throw Error(ErrorKind::kParse, source + ": expected a JSON array of rules");
  std::vector<PatternRule> rules;
  std::set<std::string> ids;
  for (const auto& r : j) {
    rules.push_back(pattern_rule_from_json(r));
    if (!ids.insert(rules.back().id).second) throw Error(ErrorKind::kConfig, "duplicate rule id '" + rules.back().id + "'");
  }
  return rules;
}

inline std::vector<PatternRule> load_pattern_rules(const std::filesystem::path& path) {
  return parse_pattern_rules(read_file(path), path.string());
}

namespace detail {

inline bool pos_ok(const std::string& want, const std::string& got) { return want == "*" || want == got; }

inline bool is_subject_label(const std::string& dep) { return dep.rfind("nsubj", 0) == 0 || dep.rfind("csubj", 0) == 0; }

// Anchor: a canonical entity or chunk label touched by a structural match,
// with whether it took the subject role there.
struct RuleSide {
  std::map<std::string, bool> anchors;
};

// Mention keys (entity canonical, chunk label) of every mention covering token t.
inline std::vector<std::string> keys_at(const ParsedRequirement& p, const std::vector<NGram>& chunks, int t) {
  std::vector<std::string> keys;
  for (const auto& m : p.mentions)
    if (m.span.contains(t)) keys.push_back("entity:" + m.canonical);
  for (const auto& c : chunks)
    if (c.span.contains(t)) keys.push_back("chunk:" + c.label);
  return keys;
}

inline std::optional<RuleSide> match_rule_side(const PatternRule& rule, const ParsedRequirement& p,
                                               const std::vector<NGram>& chunks) {
  auto heads = p.heads();
  auto is_root = [&](int t) { return heads[static_cast<std::size_t>(t)] == kRootHead; };
  auto root_connected = [&](int t) {
    int h = heads[static_cast<std::size_t>(t)];
    return h == kRootHead || (h >= 0 && is_root(h));
  };
  if (!rule.keywords.empty()) {
    if (rule.require_root && !p.has_arcs()) return std::nullopt;
    bool hit = false;
    for (const auto& t : p.tokens) {
      if (std::find(rule.keywords.begin(), rule.keywords.end(), t.lemma) == rule.keywords.end() &&
          std::find(rule.keywords.begin(), rule.keywords.end(), to_lower(t.surface)) == rule.keywords.end())
        continue;
      if (rule.require_root && !root_connected(t.index)) continue;
      hit = true;
      break;
    }
    if (!hit) return std::nullopt;
  }
  RuleSide side;
  if (rule.dep_patterns.empty()) {
    for (const auto& m : p.mentions) side.anchors.emplace("entity:" + m.canonical, false);
    for (const auto& c : chunks) side.anchors.emplace("chunk:" + c.label, false);
    return side;
  }
  if (!p.has_arcs()) return std::nullopt;
  for (const auto& arc : p.arcs) {
    if (arc.is_root()) continue;
    if (rule.require_root && !is_root(arc.head_index)) continue;
    const Token& head = p.tokens[static_cast<std::size_t>(arc.head_index)];
    const Token& child = p.tokens[static_cast<std::size_t>(arc.child_index)];
    for (const auto& dp : rule.dep_patterns) {
      if (dp.dep_label != arc.dep_label || !pos_ok(dp.head_pos, head.pos) || !pos_ok(dp.child_pos, child.pos)) continue;
      for (const auto& k : keys_at(p, chunks, arc.child_index)) side.anchors[k] |= is_subject_label(arc.dep_label);
    }
  }
  if (side.anchors.empty()) return std::nullopt;
  return side;
}

}  // namespace detail

// A pair fires for a rule when both requirements satisfy the rule's
// structural side and share at least one anchor (entity or chunk). For
// directional types the requirement where the shared anchor is the subject
// becomes the source (reversed by target_to_source).
inline std::vector<RelationPrediction> match_patterns(const AnalyzedCorpus& a, const std::vector<PatternRule>& rules,
                                                      const std::set<PairKey>* pair_scope = nullptr) {
  const std::size_t n = a.parses.size();
  struct Hit {
    std::vector<std::string> rules;
    std::set<std::string> shared;
    RelationType rtype;
    int vote = 0;  // > 0: lower index is source
  };
  std::map<std::pair<std::size_t, std::size_t>, std::map<RelationType, Hit>> hits;
  for (const auto& rule : rules) {
    std::vector<std::optional<detail::RuleSide>> sides(n);
    std::map<std::string, std::vector<std::size_t>> by_anchor;
    for (std::size_t i = 0; i < n; ++i) {
      sides[i] = detail::match_rule_side(rule, a.parses[i], a.chunks[i]);
      if (sides[i])
        for (const auto& [k, subj] : sides[i]->anchors) by_anchor[k].push_back(i);
    }
    std::map<std::pair<std::size_t, std::size_t>, std::set<std::string>> shared;
    for (const auto& [k, idx] : by_anchor)
      for (std::size_t x = 0; x < idx.size(); ++x)
        for (std::size_t y = x + 1; y < idx.size(); ++y) shared[{idx[x], idx[y]}].insert(k);
    for (const auto& [key, anchors] : shared) {
      if (pair_scope &&
          !pair_scope->count(canonical_pair(a.parses[key.first].requirement_id, a.parses[key.second].requirement_id)))
        continue;
      Hit& h = hits[key][rule.rtype];
      h.rtype = rule.rtype;
      h.rules.push_back(rule.id);
      int vote = 0;
      for (const auto& k : anchors) {
        h.shared.insert(k);
        bool si = sides[key.first]->anchors.at(k), sj = sides[key.second]->anchors.at(k);
        if (si && !sj) ++vote;
        if (sj && !si) --vote;
      }
      if (rule.direction_hint == DirectionHint::kTargetToSource) vote = -vote;
      if (rule.direction_hint == DirectionHint::kUndirected) vote = 0;
      h.vote += vote;
    }
  }
  std::vector<RelationPrediction> out;
  for (const auto& [key, by_type] : hits) {
    for (const auto& [t, h] : by_type) {
      const std::string& lo = a.parses[key.first].requirement_id;
      const std::string& hi = a.parses[key.second].requirement_id;
      bool fwd = h.vote >= 0;
      std::vector<std::string> anchors;
      for (const auto& k : h.shared) anchors.push_back(k.substr(k.find(':') + 1));
      nlohmann::json ev = {{"rules", h.rules}, {"anchors", anchors}};
      double conf = std::min(1.0, static_cast<double>(h.shared.size()) / 3.0);
      out.push_back(make_prediction(fwd ? lo : hi, fwd ? hi : lo, t, conf, "pattern", ev));
    }
  }
  sort_predictions(out);
  return out;
}

}  // namespace relx

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relx/nlp/coref.hpp"
#include "relx/nlp/preprocess.hpp"
#include "relx/retrieval/prediction.hpp"

namespace relx {

struct OntologyConcept {
  std::string id;
  std::string label;
  std::vector<std::string> synonyms;
  std::optional<std::string> parent;
};

struct OntologyRelation {
  std::string source;
  std::string target;
  RelationType rtype;
};

struct Ontology {
  std::map<std::string, OntologyConcept> concepts;
  std::vector<OntologyRelation> relations;

  // Ancestors from the direct parent upwards.
  std::vector<std::string> ancestors(const std::string& id) const {
    std::vector<std::string> out;
    auto p = concepts.at(id).parent;
    while (p) {
      out.push_back(*p);
      p = concepts.at(*p).parent;
    }
    return out;
  }
};

// Splits identifiers such as "ETCSLevel2" or "information_received" into
// lower-case words: etcs level 2 / information received.
inline std::vector<std::string> split_identifier(const std::string& s) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(to_lower(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (!std::isalnum(c)) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      unsigned char prev = static_cast<unsigned char>(cur.back());
      bool next_lower = i + 1 < s.size() && std::islower(static_cast<unsigned char>(s[i + 1]));
      bool boundary = (std::isupper(c) && std::islower(prev)) || (std::isupper(c) && std::isupper(prev) && next_lower) ||
                      (std::isdigit(c) != 0) != (std::isdigit(prev) != 0);
      if (boundary) flush();
    }
    cur += static_cast<char>(c);
  }
  flush();
  return words;
}

inline Ontology ontology_from_json(const nlohmann::json& j, const std::string& source = "<ontology>") {
  Ontology o;
  if (!j.is_object()) throw Error(ErrorKind::kParse, source + ": expected a JSON object");
  for (const auto& c : j.value("concepts", nlohmann::json::array())) {
    OntologyConcept oc;
    oc.id = c.at("id").get<std::string>();
    oc.label = c.value("label", oc.id);
    for (const auto& s : c.value("synonyms", nlohmann::json::array())) oc.synonyms.push_back(s.get<std::string>());
    if (c.contains("parent") && !c.at("parent").is_null()) oc.parent = c.at("parent").get<std::string>();
    if (!o.concepts.emplace(oc.id, oc).second) throw Error(ErrorKind::kDuplicateId, source + ": duplicate concept '" + oc.id + "'");
  }
  for (const auto& [id, c] : o.concepts)
    if (c.parent && !o.concepts.count(*c.parent))
      throw Error(ErrorKind::kUnknownId, source + ": concept '" + id + "' has unknown parent '" + *c.parent + "'");
  for (const auto& [id, c] : o.concepts) {
    std::set<std::string> seen{id};
    for (auto p = c.parent; p; p = o.concepts.at(*p).parent)
      if (!seen.insert(*p).second) throw Error(ErrorKind::kConfig, source + ": cyclic concept hierarchy through '" + id + "'");
  }
  for (const auto& r : j.value("relations", nlohmann::json::array())) {
    OntologyRelation rel{r.at("source").get<std::string>(), r.at("target").get<std::string>(),
                         relation_type_from(r.at("type").get<std::string>())};
    for (const auto* e : {&rel.source, &rel.target})
      if (!o.concepts.count(*e)) throw Error(ErrorKind::kUnknownId, source + ": relation endpoint '" + *e + "' is not a concept");
    o.relations.push_back(std::move(rel));
  }
  return o;
}

inline Ontology load_ontology(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return ontology_from_json(j, path.string());
}

// Word sequences naming a concept: split label, split id, synonyms, plus
// any synonym-table expansions of those.
inline std::vector<std::vector<std::string>> concept_terms(const OntologyConcept& c, const SynonymTable* synonyms = nullptr) {
  std::set<std::vector<std::string>> terms;
  terms.insert(split_identifier(c.label));
  terms.insert(split_identifier(c.id));
  for (const auto& s : c.synonyms) terms.insert(SynonymTable::fold_term(s));
  if (synonyms) {
    std::set<std::vector<std::string>> extra;
    for (const auto& t : terms)
      for (const auto& [a, b] : synonyms->pairs()) {
        if (t == a) extra.insert(b);
        if (t == b) extra.insert(a);
      }
    terms.insert(extra.begin(), extra.end());
  }
  terms.erase(std::vector<std::string>{});
  return {terms.begin(), terms.end()};
}

// Concepts matched by a requirement: exact match of a concept term against a
// contiguous run of token surfaces or lemmas (covers tokens, chunks and
// n-grams), also tried with hyphenated tokens split apart.
inline std::set<std::string> match_concepts(const Ontology& o, const ParsedRequirement& p, const SynonymTable* synonyms = nullptr) {
  std::vector<std::string> surf, lem;
  for (const auto& t : p.tokens) {
    for (const auto& w : split_identifier(t.surface)) surf.push_back(w);
    lem.push_back(to_lower(t.lemma.empty() ? t.surface : t.lemma));
  }
  std::vector<std::string> surf_plain;
  for (const auto& t : p.tokens) surf_plain.push_back(to_lower(t.surface));
  auto contains = [](const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.size() > hay.size()) return false;
    return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
  };
  std::set<std::string> out;
  for (const auto& [id, c] : o.concepts)
    for (const auto& term : concept_terms(c, synonyms))
      if (contains(surf, term) || contains(lem, term) || contains(surf_plain, term)) {
        out.insert(id);
        break;
      }
  return out;
}

// Relation predictions from typed ontology relations between matched
// concepts, plus the hierarchy rule: a requirement matching a concept Details
// a requirement matching one of its ancestors (and not the concept itself).
inline std::vector<RelationPrediction> ontology_match(const Ontology& o, const std::vector<ParsedRequirement>& parses,
                                                      const SynonymTable* synonyms = nullptr, bool hierarchy_rule = true) {
  const std::size_t n = parses.size();
  std::vector<std::set<std::string>> matched(n);
  std::map<std::string, std::vector<std::size_t>> by_concept;
  for (std::size_t i = 0; i < n; ++i) {
    matched[i] = match_concepts(o, parses[i], synonyms);
    for (const auto& c : matched[i]) by_concept[c].push_back(i);
  }
  // (source, target, type) -> sorted evidence concept pairs
  std::map<std::tuple<std::string, std::string, RelationType>, std::set<std::pair<std::string, std::string>>> found;
  auto emit = [&](std::size_t i, std::size_t j, RelationType t, const std::string& c1, const std::string& c2) {
    if (i == j) return;
    auto p = make_prediction(parses[i].requirement_id, parses[j].requirement_id, t, 1.0, "ontology");
    found[{p.source_id, p.target_id, t}].insert({c1, c2});
  };
  for (const auto& rel : o.relations) {
    auto a = by_concept.find(rel.source), b = by_concept.find(rel.target);
    if (a == by_concept.end() || b == by_concept.end()) continue;
    for (std::size_t i : a->second)
      for (std::size_t j : b->second) emit(i, j, rel.rtype, rel.source, rel.target);
  }
  if (hierarchy_rule) {
    for (const auto& [child, reqs] : by_concept)
      for (const auto& anc : o.ancestors(child)) {
        auto b = by_concept.find(anc);
        if (b == by_concept.end()) continue;
        for (std::size_t i : reqs)
          for (std::size_t j : b->second)
            if (!matched[j].count(child)) emit(i, j, RelationType::Details, child, anc);
      }
  }
  std::vector<RelationPrediction> out;
  for (const auto& [key, concepts] : found) {
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& [c1, c2] : concepts) ev.push_back({c1, c2});
    out.push_back(make_prediction(std::get<0>(key), std::get<1>(key), std::get<2>(key), 1.0, "ontology", {{"concepts", ev}}));
  }
  sort_predictions(out);
  return out;
}

}  // namespace relx

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "relx/corpus/corpus.hpp"
#include "relx/nlp/pipeline.hpp"
#include "relx/retrieval/prediction.hpp"

namespace relx {

struct CrossrefConfig {
  double saturation = 3.0;  // evidence items for confidence 1.0
  RelationType symmetric_type = RelationType::IsSimilar;
  RelationType directional_type = RelationType::Requires;
  bool use_entities = true;
  bool use_coref = true;
  bool use_id_refs = true;

  static CrossrefConfig from_json(const nlohmann::json& j) {
    CrossrefConfig c;
    c.saturation = j.value("saturation", 3.0);
    if (c.saturation <= 0) throw Error(ErrorKind::kConfig, "crossref saturation must be > 0");
    if (j.contains("symmetric_type")) c.symmetric_type = relation_type_from(j.at("symmetric_type").get<std::string>());
    if (j.contains("directional_type")) c.directional_type = relation_type_from(j.at("directional_type").get<std::string>());
    c.use_entities = j.value("use_entities", true);
    c.use_coref = j.value("use_coref", true);
    c.use_id_refs = j.value("use_id_refs", true);
    return c;
  }
};

// One prediction per pair with shared canonical entities, cross-document
// coreference links (other than exact entity repeats) or literal mentions of
// another requirement's id. Directional evidence (id references, location
// references) points from the referring requirement.
inline std::vector<RelationPrediction> detect_cross_references(const Corpus& corpus, const AnalyzedCorpus& a,
                                                               const CrossrefConfig& config = {}) {
  struct Evidence {
    std::set<std::string> entities;
    std::vector<nlohmann::json> coref;
    std::set<std::string> id_refs;
    int forward = 0;  // directional items pointing lower index -> higher index
    int backward = 0;
  };
  std::map<std::pair<std::size_t, std::size_t>, Evidence> ev;
  const std::size_t n = a.parses.size();
  auto slot = [&](std::size_t i, std::size_t j) -> Evidence& { return ev[{std::min(i, j), std::max(i, j)}]; };

  if (config.use_entities) {
    std::map<std::string, std::vector<std::size_t>> holders;
    for (std::size_t i = 0; i < n; ++i) {
      std::set<std::string> seen;
      for (const auto& m : a.parses[i].mentions)
        if (seen.insert(m.canonical).second) holders[m.canonical].push_back(i);
    }
    for (const auto& [canon, idx] : holders)
      for (std::size_t x = 0; x < idx.size(); ++x)
        for (std::size_t y = x + 1; y < idx.size(); ++y) slot(idx[x], idx[y]).entities.insert(canon);
  }

  if (config.use_coref) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) pos[a.parses[i].requirement_id] = i;
    for (const auto& l : a.coref) {
      if (l.rule == CorefRule::kExactEntity) continue;
      std::size_t from = pos.at(l.from.requirement_id), to = pos.at(l.to.requirement_id);
      if (from == to) continue;
      Evidence& e = slot(from, to);
      e.coref.push_back({{"rule", std::string(to_string(l.rule))}, {"key", l.key}, {"from", l.from.requirement_id}});
      if (l.rule == CorefRule::kLocationPredecessor) (from < to ? e.forward : e.backward) += 1;
    }
  }

  if (config.use_id_refs) {
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& t : a.parses[i].tokens) {
        if (t.surface == a.parses[i].requirement_id || !corpus.contains(t.surface)) continue;
        std::size_t j = *corpus.index_of(t.surface);
        Evidence& e = slot(i, j);
        if (e.id_refs.insert(a.parses[i].requirement_id + "->" + t.surface).second) (i < j ? e.forward : e.backward) += 1;
      }
    }
  }

  std::vector<RelationPrediction> out;
  for (const auto& [key, e] : ev) {
    std::size_t matches = e.entities.size() + e.coref.size() + e.id_refs.size();
    if (matches == 0) continue;
    const std::string& lo = a.parses[key.first].requirement_id;
    const std::string& hi = a.parses[key.second].requirement_id;
    nlohmann::json evidence = {{"entities", std::vector<std::string>(e.entities.begin(), e.entities.end())},
                               {"coref", e.coref},
                               {"id_refs", std::vector<std::string>(e.id_refs.begin(), e.id_refs.end())},
                               {"matches", matches}};
    double conf = std::min(1.0, static_cast<double>(matches) / config.saturation);
    if (e.forward + e.backward > 0) {
      bool fwd = e.forward >= e.backward;
      out.push_back(make_prediction(fwd ? lo : hi, fwd ? hi : lo, config.directional_type, conf, "crossref", evidence));
    } else {
      out.push_back(make_prediction(lo, hi, config.symmetric_type, conf, "crossref", evidence));
    }
  }
  sort_predictions(out);
  return out;
}

}  // namespace relx

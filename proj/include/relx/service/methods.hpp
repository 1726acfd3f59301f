#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relx/corpus/corpus.hpp"
#include "relx/corpus/relations.hpp"
#include "relx/learning/features.hpp"
#include "relx/nlp/pipeline.hpp"
#include "relx/retrieval/crossref.hpp"
#include "relx/retrieval/ontology.hpp"
#include "relx/retrieval/patterns.hpp"
#include "relx/retrieval/semantic_graph.hpp"
#include "relx/retrieval/similarity_relate.hpp"
#include "relx/retrieval/syntactic_graph.hpp"

namespace relx {

inline const std::vector<std::string>& extraction_methods() {
  static const std::vector<std::string> m = {"crossref", "pattern", "tfidf", "embedding", "syngraph", "semgraph", "ontology"};
  return m;
}

inline std::filesystem::path resolve_path(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

// Pipeline resources from JSON: {"preprocess", "gazetteer", "synonyms",
// "lexicon", "coref_triggers", "antecedent_entity_type", "ngram_patterns"}.
// Paths resolve against `base_dir`. Also records the base dir so method
// defaults ("rules", "ontology") can be found next to it.
struct ResourceConfig {
  nlohmann::json json = nlohmann::json::object();
  std::filesystem::path base_dir;

  static ResourceConfig load(const std::filesystem::path& path) {
    ResourceConfig c;
    try {
      c.json = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
    }
    c.base_dir = path.parent_path();
    return c;
  }

  std::optional<std::filesystem::path> path_of(const std::string& key) const {
    if (!json.contains(key) || json.at(key).is_null()) return std::nullopt;
    return resolve_path(json.at(key).get<std::string>(), base_dir);
  }

  PipelineResources build() const {
    PipelineResources r;
    r.preprocess = PreprocessConfig::from_json(json.value("preprocess", nlohmann::json::object()), base_dir);
    if (auto p = path_of("gazetteer")) r.gazetteer = Gazetteer::load(*p);
    if (auto p = path_of("synonyms")) r.synonyms = SynonymTable::load(*p);
    if (auto p = path_of("lexicon")) r.lexicon = PosLexicon::load(*p);
    if (json.contains("coref_triggers")) r.coref.generic_triggers = json.at("coref_triggers").get<std::vector<std::string>>();
    r.coref.antecedent_entity_type = json.value("antecedent_entity_type", r.coref.antecedent_entity_type);
    if (json.contains("ngram_patterns"))
      for (const auto& p : json.at("ngram_patterns")) r.ngram_patterns.push_back(PosPattern::parse(p.get<std::string>()));
    return r;
  }
};

namespace detail {

// A param that is either an inline JSON value or a path to a JSON file.
inline nlohmann::json json_param(const nlohmann::json& params, const std::string& key, const ResourceConfig& res,
                                 const std::filesystem::path& param_base) {
  std::optional<std::filesystem::path> path;
  if (params.contains(key)) {
    const auto& v = params.at(key);
    if (!v.is_string()) return v;
    path = resolve_path(v.get<std::string>(), param_base);
  } else {
    path = res.path_of(key);
  }
  if (!path) throw Error(ErrorKind::kConfig, "parameter '" + key + "' is required");
  try {
    return nlohmann::json::parse(read_file(*path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, path->string() + ": " + e.what());
  }
}

inline void check_known_params(const nlohmann::json& params, const std::set<std::string>& known, const std::string& method) {
  if (!params.is_object()) throw Error(ErrorKind::kConfig, "params must be a JSON object");
  for (const auto& [k, v] : params.items())
    if (k != "seed" && !known.count(k)) throw Error(ErrorKind::kConfig, "unknown parameter '" + k + "' for method '" + method + "'");
}

}  // namespace detail

// Single entry point for every extraction method; the CLI and the HTTP
// service both call this, so identical inputs give identical output.
inline std::vector<RelationPrediction> run_method(const Corpus& corpus, const AnalyzedCorpus& a, const std::string& method,
                                                  const nlohmann::json& params, const ResourceConfig& res,
                                                  const std::filesystem::path& param_base = {}) {
  if (method == "crossref") {
    detail::check_known_params(params, {"saturation", "symmetric_type", "directional_type", "use_entities", "use_coref", "use_id_refs"},
                               method);
    return detect_cross_references(corpus, a, CrossrefConfig::from_json(params));
  }
  if (method == "pattern" || method == "syngraph") {
    detail::check_known_params(params, {"rules"}, method);
    std::vector<PatternRule> rules;
    auto j = detail::json_param(params, "rules", res, param_base);
    rules = parse_pattern_rules(j.dump());
    return method == "pattern" ? match_patterns(a, rules) : syngraph_relate(a.parses, rules);
  }
  if (method == "tfidf") {
    detail::check_known_params(params, {"threshold", "filter", "sublinear"}, method);
    TokenFilter filter = TokenFilter::from_json(params.value("filter", nlohmann::json::object()));
    auto model = tfidf_fit(a.parses, filter, params.value("sublinear", false));
    return tfidf_relate(model, a.parses, params.value("threshold", 0.4));
  }
  if (method == "embedding") {
    detail::check_known_params(params, {"embeddings", "measure", "threshold", "filter"}, method);
    std::optional<std::filesystem::path> path;
    if (params.contains("embeddings")) path = resolve_path(params.at("embeddings").get<std::string>(), param_base);
    else path = res.path_of("embeddings");
    if (!path) throw Error(ErrorKind::kConfig, "parameter 'embeddings' is required");
    auto table = load_embeddings(*path);
    return embedding_relate(table, a.parses, parse_measure(params.value("measure", std::string("cosine"))),
                            params.value("threshold", 0.8), TokenFilter::from_json(params.value("filter", nlohmann::json::object())));
  }
  if (method == "semgraph") {
    detail::check_known_params(params, {"decay", "hops", "floor", "threshold", "type"}, method);
    ActivationRelateConfig c;
    c.params.decay = params.value("decay", c.params.decay);
    c.params.hops = params.value("hops", c.params.hops);
    c.params.floor = params.value("floor", c.params.floor);
    c.threshold = params.value("threshold", c.threshold);
    if (params.contains("type")) c.rtype = relation_type_from(params.at("type").get<std::string>());
    return activation_relate(build_semantic_graph(a), a.parses, c);
  }
  if (method == "ontology") {
    detail::check_known_params(params, {"ontology", "hierarchy", "use_synonyms"}, method);
    Ontology o = ontology_from_json(detail::json_param(params, "ontology", res, param_base));
    SynonymTable syn;
    if (params.value("use_synonyms", true))
      if (auto p = res.path_of("synonyms")) syn = SynonymTable::load(*p);
    return ontology_match(o, a.parses, syn.empty() ? nullptr : &syn, params.value("hierarchy", true));
  }
  throw Error(ErrorKind::kUsage, "unknown method '" + method + "'");
}

}  // namespace relx

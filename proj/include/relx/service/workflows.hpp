#pragma once

#include <algorithm>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "relx/corpus/pairs.hpp"
#include "relx/eval/cross_validate.hpp"
#include "relx/eval/metrics.hpp"
#include "relx/learning/active.hpp"
#include "relx/learning/classifiers.hpp"
#include "relx/learning/ensemble.hpp"
#include "relx/learning/features.hpp"
#include "relx/learning/kmeans.hpp"
#include "relx/learning/wsl.hpp"
#include "relx/service/methods.hpp"
#include "relx/vector/lsa.hpp"

namespace relx {

// Fitted document models plus a featurizer for one recipe. Params:
// {"recipe": {...}, "lsa_k": 50, "seed": 42, "embeddings": path}.
struct FeatureSpace {
  TfidfModel tfidf;
  std::optional<LsaModel> lsa;
  std::optional<EmbeddingTable> embeddings;
  std::unique_ptr<PairFeaturizer> featurizer;

  std::vector<double> operator()(const PairKey& k) const { return (*featurizer)(k).vector; }
};

inline std::unique_ptr<FeatureSpace> build_feature_space(const AnalyzedCorpus& a, const nlohmann::json& params,
                                                         const ResourceConfig& res, const std::filesystem::path& param_base = {}) {
  auto fs = std::make_unique<FeatureSpace>();
  FeatureRecipe recipe = FeatureRecipe::from_json(params.value("recipe", nlohmann::json::object()));
  fs->tfidf = tfidf_fit(a.parses);
  FeatureModels models;
  models.tfidf = &fs->tfidf;
  if (recipe.vectors == "lsa") {
    auto docs = tfidf_vectorize_all(fs->tfidf, a.parses);
    Eigen::MatrixXd m = document_term_matrix(docs, fs->tfidf.dimension());
    int full = static_cast<int>(std::min(m.rows(), m.cols()));
    int k = std::min(params.value("lsa_k", 50), full);
    LsaOptions opt;
    opt.seed = params.value("seed", std::uint64_t{42});
    fs->lsa = lsa_fit(m, k, opt);
    models.lsa = &*fs->lsa;
  } else if (recipe.vectors == "embedding") {
    std::optional<std::filesystem::path> path;
    if (params.contains("embeddings")) path = resolve_path(params.at("embeddings").get<std::string>(), param_base);
    else path = res.path_of("embeddings");
    if (!path) throw Error(ErrorKind::kConfig, "embedding features need an 'embeddings' table");
    fs->embeddings = load_embeddings(*path);
    models.embeddings = &*fs->embeddings;
  }
  fs->featurizer = std::make_unique<PairFeaturizer>(a, models, recipe);
  return fs;
}

// Scores predictions on the gold pair universe. Against a binary gold set
// (None / Related) every non-None prediction counts as Related.
inline MetricsReport evaluate_predictions(const Corpus& corpus, const RelationSet& gold, const std::vector<RelationPrediction>& preds) {
  LabelMap g;
  for (const auto& p : labeled_pairs(gold, corpus)) g[p.pair] = p.label;
  bool binary = std::all_of(g.begin(), g.end(), [](const auto& kv) {
    return kv.second == RelationType::None || kv.second == RelationType::Related;
  });
  auto decided = decisions_of(preds);
  if (binary)
    for (auto& [k, v] : decided)
      if (v.first != RelationType::None) v.first = RelationType::Related;
  return evaluate(g, decided, {});
}

struct TrainOutcome {
  MetricsReport report;
  std::vector<RelationPrediction> predictions;
};

// k-fold cross-validation of one classifier or the ensemble on the gold set.
// Params: {"classifier": "naive_bayes"|"knn"|"linear_svm"|"ensemble",
// "folds": 10, "stratified": true, "seed": 42, "hyper": {}, "ensemble": {},
// plus feature-space params}.
inline TrainOutcome run_train(const Corpus& corpus, const AnalyzedCorpus& a, const RelationSet& gold, const nlohmann::json& params,
                              const ResourceConfig& res, const std::filesystem::path& param_base = {}) {
  auto dataset = labeled_pairs(gold, corpus);
  const std::uint64_t seed = params.value("seed", std::uint64_t{42});
  auto folds = kfold_split(dataset, params.value("folds", 10), params.value("stratified", true), seed);
  auto fs = build_feature_space(a, params, res, param_base);
  Matrix x;
  std::vector<RelationType> y;
  for (const auto& p : dataset) {
    x.push_back((*fs)(p.pair));
    y.push_back(p.label);
  }
  const std::string kind = params.value("classifier", std::string("ensemble"));
  using Scored = std::vector<std::pair<RelationType, double>>;
  CrossValidationResult cv;
  if (kind == "ensemble") {
    EnsembleConfig ec = EnsembleConfig::from_json(params.value("ensemble", nlohmann::json::object()));
    cv = cross_validate<Ensemble>(
        dataset, folds,
        [&](const std::vector<std::size_t>& idx) {
          Matrix tx;
          std::vector<RelationType> ty;
          for (auto i : idx) tx.push_back(x[i]), ty.push_back(y[i]);
          return train_ensemble(ec, tx, ty);
        },
        [&](const Ensemble& e, const std::vector<std::size_t>& idx) {
          Scored out;
          for (auto i : idx) {
            auto d = ensemble_predict(e, x[i]);
            out.push_back({d.label.value_or(RelationType::None), d.confidence});
          }
          return out;
        });
  } else {
    ClassifierKind ck = parse_classifier_kind(kind);
    nlohmann::json hyper = params.value("hyper", nlohmann::json::object());
    cv = cross_validate<ClassifierModel>(
        dataset, folds,
        [&](const std::vector<std::size_t>& idx) {
          Matrix tx;
          std::vector<RelationType> ty;
          for (auto i : idx) tx.push_back(x[i]), ty.push_back(y[i]);
          return train_classifier(ck, tx, ty, hyper, seed);
        },
        [&](const ClassifierModel& m, const std::vector<std::size_t>& idx) {
          Scored out;
          for (auto i : idx) {
            auto p = predict_proba(m, x[i]);
            std::size_t best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
            out.push_back({m.classes[best], p[best]});
          }
          return out;
        });
  }
  TrainOutcome t;
  t.report = std::move(cv.pooled);
  t.report.run = {{"workflow", "train"}, {"classifier", kind}, {"recipe", fs->featurizer->recipe().to_json()}, {"seed", seed},
                  {"pairs", dataset.size()}};
  for (const auto& [k, v] : cv.predictions)
    if (v.first != RelationType::None) t.predictions.push_back(make_prediction(k.source, k.target, v.first, v.second, "classifier"));
  sort_predictions(t.predictions);
  return t;
}

struct ClusterOutcome {
  ClusteringResult clustering;
  std::vector<RelationPrediction> suggestions;
};

// Params: {"k": 10, "seed": 42, "lsa_k": 50, "max_iters": 300, "suggest": 25}.
inline ClusterOutcome run_cluster(const AnalyzedCorpus& a, const nlohmann::json& params) {
  const std::uint64_t seed = params.value("seed", std::uint64_t{42});
  auto tfidf = tfidf_fit(a.parses);
  auto docs = tfidf_vectorize_all(tfidf, a.parses);
  Eigen::MatrixXd m = document_term_matrix(docs, tfidf.dimension());
  int k_lsa = std::min(params.value("lsa_k", 50), static_cast<int>(std::min(m.rows(), m.cols())));
  LsaOptions opt;
  opt.seed = seed;
  LsaModel lsa = lsa_fit(m, k_lsa, opt);
  Matrix x;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    x.push_back(lsa_project(lsa, docs[i]));
    ids.push_back(a.parses[i].requirement_id);
  }
  ClusterOutcome out;
  out.clustering = kmeans_cluster(ids, x, params.value("k", 10), seed, params.value("max_iters", 300));
  out.suggestions = suggest_from_clusters(out.clustering, x, params.value("suggest", 25));
  return out;
}

namespace detail {

// Deterministic split of labeled pairs into a seed part and the rest.
inline std::pair<std::vector<LabeledPair>, std::vector<LabeledPair>> split_seed(std::vector<LabeledPair> pairs, double fraction,
                                                                                 std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error(ErrorKind::kConfig, "seed_fraction must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(pairs.size()) * fraction));
  std::vector<LabeledPair> head(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<LabeledPair> tail(pairs.begin() + static_cast<std::ptrdiff_t>(n), pairs.end());
  return {head, tail};
}

}  // namespace detail

struct WslOutcome {
  WslResult result;
  MetricsReport report;  // pseudo-labels against the withheld gold
};

// Params: {"seed_fraction": 0.2, "max_iters": 10, "seed": 42, "ensemble": {},
// plus feature-space params}.
inline WslOutcome run_wsl(const Corpus& corpus, const AnalyzedCorpus& a, const RelationSet& gold, const nlohmann::json& params,
                          const ResourceConfig& res, const std::filesystem::path& param_base = {}) {
  const std::uint64_t seed = params.value("seed", std::uint64_t{42});
  auto [head, tail] = detail::split_seed(labeled_pairs(gold, corpus), params.value("seed_fraction", 0.2), seed);
  auto fs = build_feature_space(a, params, res, param_base);
  std::vector<LabeledExample> seeds;
  for (const auto& p : head) seeds.push_back({p.pair, (*fs)(p.pair), p.label, Provenance::kGold});
  std::vector<UnlabeledExample> pool;
  LabelMap withheld;
  for (const auto& p : tail) {
    pool.push_back({p.pair, (*fs)(p.pair)});
    withheld[canonical_pair(p.pair)] = p.label;
  }
  EnsembleConfig ec = EnsembleConfig::from_json(params.value("ensemble", nlohmann::json::object()));
  WslOutcome out;
  out.result = wsl_run(seeds, pool, ec, params.value("max_iters", 10));
  LabelMap covered;
  std::map<PairKey, std::pair<RelationType, double>> decided;
  for (const auto& p : out.result.predictions) {
    PairKey k = p.pair();
    covered[k] = withheld.at(k);
    decided[k] = {p.rtype, p.confidence};
  }
  out.report = evaluate(covered, decided, classes_of(withheld, {}));
  out.report.run = {{"workflow", "wsl"}, {"seed_pairs", head.size()}, {"pool", tail.size()},
                    {"pseudo_labels", out.result.predictions.size()}, {"iterations", out.result.iterations}};
  return out;
}

// Builds an AL session from creation params. Params: {"thresholds",
// "oracle", "ensemble", "seed_labels": [{source,target,type}] or
// "seed_fraction": 0.1, "unlabeled": [[a,b],...], "seed", feature params}.
// Without "unlabeled" the pool is every gold pair outside the seed when gold
// is given, all candidate pairs otherwise.
inline ALSession make_al_session(const std::string& id, const Corpus& corpus, const AnalyzedCorpus& a, const RelationSet* gold,
                                 const nlohmann::json& params, const ResourceConfig& res,
                                 const std::filesystem::path& param_base = {}) {
  ALConfig config = ALConfig::from_json(params);
  const std::uint64_t seed = params.value("seed", std::uint64_t{42});
  std::vector<RelationInstance> seeds;
  std::set<PairKey> pool;
  if (params.contains("seed_labels")) {
    for (const auto& s : params.at("seed_labels")) {
      RelationInstance r{s.at("source").get<std::string>(), s.at("target").get<std::string>(),
                         relation_type_from(s.at("type").get<std::string>()), Provenance::kGold};
      corpus.at(r.source_id);
      corpus.at(r.target_id);
      seeds.push_back(canonicalize(r));
    }
  } else {
    if (!gold) throw Error(ErrorKind::kConfig, "AL session needs 'seed_labels' or a gold set to sample from");
    std::map<PairKey, RelationInstance> by_pair;
    for (const auto& r : gold->instances) by_pair[r.pair()] = r;
    auto [head, tail] = detail::split_seed(labeled_pairs(*gold, corpus), params.value("seed_fraction", 0.1), seed);
    for (const auto& p : head) {
      auto it = by_pair.find(p.pair);
      seeds.push_back(it != by_pair.end() ? it->second : RelationInstance{p.pair.source, p.pair.target, p.label, Provenance::kGold});
    }
    for (const auto& p : tail) pool.insert(p.pair);
  }
  if (params.contains("unlabeled")) {
    pool.clear();
    for (const auto& p : params.at("unlabeled")) {
      auto s = p.at(0).get<std::string>(), t = p.at(1).get<std::string>();
      corpus.at(s);
      corpus.at(t);
      pool.insert(canonical_pair(s, t));
    }
  } else if (pool.empty()) {
    if (gold) {
      for (const auto& p : labeled_pairs(*gold, corpus)) pool.insert(p.pair);
    } else {
      for (const auto& p : enumerate_candidate_pairs(corpus, PairMode::kUnordered)) pool.insert(p);
    }
  }
  auto fs = build_feature_space(a, params, res, param_base);
  ALSession::FeatureMap features;
  for (const auto& s : seeds) features[canonical_pair(s.source_id, s.target_id)] = (*fs)(canonical_pair(s.source_id, s.target_id));
  for (const auto& k : pool)
    if (!features.count(k)) features[k] = (*fs)(k);
  std::map<PairKey, RelationInstance> gold_map;
  if (gold)
    for (const auto& r : gold->instances) gold_map[r.pair()] = r;
  return ALSession(id, config, seeds, pool, std::move(features), std::move(gold_map));
}

}  // namespace relx

#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relx/nlp/pipeline.hpp"
#include "relx/vector/embeddings.hpp"
#include "relx/vector/lsa.hpp"
#include "relx/vector/similarity.hpp"
#include "relx/vector/tfidf.hpp"

namespace relx {

// Which document vectors feed a pair vector, and which blocks are
// concatenated (in this order): abs_diff = |u - v|, product = u * v
// (element-wise), cosine, shared_entities, shared_chunks.
struct FeatureRecipe {
  std::string id = "lsa-default";
  std::string vectors = "lsa";  // tfidf | embedding | lsa
  std::vector<std::string> blocks = {"abs_diff", "product", "cosine", "shared_entities", "shared_chunks"};

  static FeatureRecipe from_json(const nlohmann::json& j) {
    FeatureRecipe r;
    r.id = j.value("id", r.id);
    r.vectors = j.value("vectors", r.vectors);
    if (r.vectors != "tfidf" && r.vectors != "embedding" && r.vectors != "lsa")
      throw Error(ErrorKind::kConfig, "unknown feature vectors '" + r.vectors + "'");
    if (j.contains("blocks")) r.blocks = j.at("blocks").get<std::vector<std::string>>();
    static const std::set<std::string> kBlocks = {"abs_diff", "product", "cosine", "shared_entities", "shared_chunks"};
    for (const auto& b : r.blocks)
      if (!kBlocks.count(b)) throw Error(ErrorKind::kConfig, "unknown feature block '" + b + "'");
    return r;
  }
  nlohmann::json to_json() const { return {{"id", id}, {"vectors", vectors}, {"blocks", blocks}}; }
};

struct FeatureModels {
  const TfidfModel* tfidf = nullptr;
  const EmbeddingTable* embeddings = nullptr;
  const LsaModel* lsa = nullptr;  // projects TF-IDF vectors; needs `tfidf`
};

struct PairFeatures {
  PairKey pair;
  std::vector<double> vector;
  std::string recipe;
};

// Caches per-requirement vectors so pair vectors are cheap.
class PairFeaturizer {
 public:
  PairFeaturizer(const AnalyzedCorpus& a, const FeatureModels& models, FeatureRecipe recipe) : recipe_(std::move(recipe)) {
    auto need = [&](bool ok, const char* what) {
      if (!ok) throw Error(ErrorKind::kConfig, std::string("feature recipe '") + recipe_.id + "' needs a fitted " + what);
    };
    for (std::size_t i = 0; i < a.parses.size(); ++i) {
      const auto& p = a.parses[i];
      index_[p.requirement_id] = i;
      if (recipe_.vectors == "tfidf") {
        need(models.tfidf, "TF-IDF model");
        docs_.push_back(tfidf_vectorize(*models.tfidf, p).to_dense(models.tfidf->dimension()));
      } else if (recipe_.vectors == "embedding") {
        need(models.embeddings, "embedding table");
        docs_.push_back(embed_requirement(*models.embeddings, p).vector);
      } else {
        need(models.lsa && models.tfidf, "LSA model");
        docs_.push_back(lsa_project(*models.lsa, tfidf_vectorize(*models.tfidf, p)));
      }
      std::set<std::string> ents, chunks;
      for (const auto& m : p.mentions) ents.insert(m.canonical);
      for (const auto& c : a.chunks[i]) chunks.insert(c.label);
      entities_.push_back(std::move(ents));
      chunks_.push_back(std::move(chunks));
    }
  }

  const FeatureRecipe& recipe() const { return recipe_; }

  PairFeatures operator()(const PairKey& pair) const {
    std::size_t i = at(pair.source), j = at(pair.target);
    const auto& u = docs_[i];
    const auto& v = docs_[j];
    PairFeatures f{pair, {}, recipe_.id};
    for (const auto& b : recipe_.blocks) {
      if (b == "abs_diff")
        for (std::size_t k = 0; k < u.size(); ++k) f.vector.push_back(std::abs(u[k] - v[k]));
      else if (b == "product")
        for (std::size_t k = 0; k < u.size(); ++k) f.vector.push_back(u[k] * v[k]);
      else if (b == "cosine")
        f.vector.push_back(similarity(u, v, SimilarityMeasure::kCosine));
      else if (b == "shared_entities")
        f.vector.push_back(static_cast<double>(intersection(entities_[i], entities_[j])));
      else if (b == "shared_chunks")
        f.vector.push_back(static_cast<double>(intersection(chunks_[i], chunks_[j])));
    }
    return f;
  }

 private:
  std::size_t at(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorKind::kUnknownId, "unknown requirement id '" + id + "'");
    return it->second;
  }
  static std::size_t intersection(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t n = 0;
    for (const auto& x : a) n += b.count(x);
    return n;
  }

  FeatureRecipe recipe_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<double>> docs_;
  std::vector<std::set<std::string>> entities_, chunks_;
};

inline PairFeatures featurize_pair(const AnalyzedCorpus& a, const FeatureModels& models, const FeatureRecipe& recipe,
                                   const PairKey& pair) {
  return PairFeaturizer(a, models, recipe)(pair);
}

}  // namespace relx

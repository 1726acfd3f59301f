#pragma once

#include <string>
#include <vector>

#include "relx/nlp/parsed.hpp"
#include "relx/retrieval/prediction.hpp"
#include "relx/vector/embeddings.hpp"
#include "relx/vector/similarity.hpp"
#include "relx/vector/tfidf.hpp"

namespace relx {

namespace detail {

inline void check_threshold(double thr) {
  if (!(thr >= 0.0 && thr <= 1.0)) throw Error(ErrorKind::kConfig, "threshold must lie in [0, 1]");
}

}  // namespace detail

// IsSimilar for every unordered pair whose TF-IDF cosine reaches `thr`.
inline std::vector<RelationPrediction> tfidf_relate(const TfidfModel& model, const std::vector<ParsedRequirement>& parses,
                                                    double thr) {
  detail::check_threshold(thr);
  auto vecs = tfidf_vectorize_all(model, parses);
  std::vector<double> norms;
  for (const auto& v : vecs) norms.push_back(v.norm());
  std::vector<RelationPrediction> out;
  for (std::size_t i = 0; i < vecs.size(); ++i)
    for (std::size_t j = i + 1; j < vecs.size(); ++j) {
      double sim = norms[i] == 0 || norms[j] == 0 ? 0.0 : std::clamp(vecs[i].dot(vecs[j]) / (norms[i] * norms[j]), -1.0, 1.0);
      if (sim < thr || sim <= 0.0) continue;
      out.push_back(make_prediction(parses[i].requirement_id, parses[j].requirement_id, RelationType::IsSimilar, sim, "tfidf",
                                    {{"cosine", sim}}));
    }
  sort_predictions(out);
  return out;
}

// As tfidf_relate over mean embeddings; distances become 1/(1+d).
inline std::vector<RelationPrediction> embedding_relate(const EmbeddingTable& table, const std::vector<ParsedRequirement>& parses,
                                                        SimilarityMeasure measure, double thr, const TokenFilter& filter = {}) {
  detail::check_threshold(thr);
  std::vector<DocumentEmbedding> docs;
  for (const auto& p : parses) docs.push_back(embed_requirement(table, p, filter));
  std::vector<RelationPrediction> out;
  for (std::size_t i = 0; i < docs.size(); ++i)
    for (std::size_t j = i + 1; j < docs.size(); ++j) {
      double score = (docs[i].all_oov || docs[j].all_oov) ? 0.0 : similarity_score(docs[i].vector, docs[j].vector, measure);
      if (score < thr || score <= 0.0) continue;
      out.push_back(make_prediction(parses[i].requirement_id, parses[j].requirement_id, RelationType::IsSimilar, score,
                                    "embedding", {{"measure", to_string(measure)}, {"score", score}}));
    }
  sort_predictions(out);
  return out;
}

}  // namespace relx

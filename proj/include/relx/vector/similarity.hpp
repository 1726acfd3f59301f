#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "relx/error.hpp"
#include "relx/vector/sparse.hpp"

namespace relx {

enum class SimilarityMeasure { kCosine, kEuclidean, kManhattan };

inline SimilarityMeasure parse_measure(const std::string& s) {
  if (s == "cosine") return SimilarityMeasure::kCosine;
  if (s == "euclidean") return SimilarityMeasure::kEuclidean;
  if (s == "manhattan") return SimilarityMeasure::kManhattan;
  throw Error(ErrorKind::kConfig, "unknown similarity measure '" + s + "'");
}

inline std::string to_string(SimilarityMeasure m) {
  switch (m) {
    case SimilarityMeasure::kCosine: return "cosine";
    case SimilarityMeasure::kEuclidean: return "euclidean";
    case SimilarityMeasure::kManhattan: return "manhattan";
  }
  return "";
}

// Cosine in [-1, 1]; euclidean and manhattan as distances. Cosine with a
// zero vector is 0.
inline double similarity(const std::vector<double>& u, const std::vector<double>& v, SimilarityMeasure measure) {
  if (u.size() != v.size())
    throw Error(ErrorKind::kDimension,
                "dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double acc = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    switch (measure) {
      case SimilarityMeasure::kCosine:
        acc += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
        break;
      case SimilarityMeasure::kEuclidean: acc += (u[i] - v[i]) * (u[i] - v[i]); break;
      case SimilarityMeasure::kManhattan: acc += std::abs(u[i] - v[i]); break;
    }
  }
  if (measure == SimilarityMeasure::kEuclidean) return std::sqrt(acc);
  if (measure == SimilarityMeasure::kManhattan) return acc;
  if (nu == 0 || nv == 0) return 0.0;
  return std::clamp(acc / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

inline double cosine(const SparseVector& u, const SparseVector& v) {
  double nu = u.norm(), nv = v.norm();
  if (nu == 0 || nv == 0) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

// Score where larger means more similar: cosine as is, distances as 1/(1+d).
inline double similarity_score(const std::vector<double>& u, const std::vector<double>& v, SimilarityMeasure measure) {
  double s = similarity(u, v, measure);
  return measure == SimilarityMeasure::kCosine ? s : 1.0 / (1.0 + s);
}

}  // namespace relx

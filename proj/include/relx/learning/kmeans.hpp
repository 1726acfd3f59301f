#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "relx/learning/classifiers.hpp"
#include "relx/retrieval/prediction.hpp"

namespace relx {

struct ClusteringResult {
  int k = 0;
  std::vector<std::string> ids;
  std::vector<int> assignments;  // per point
  Matrix centroids;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after every assignment step, then final
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline std::size_t nearest_centroid(const std::vector<double>& x, const Matrix& centroids, double* dist = nullptr) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    double d = sq_dist(x, centroids[c]);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  if (dist) *dist = bd;
  return best;
}

}  // namespace detail

// k-means++ seeding, then Lloyd iterations until the assignment no longer
// changes or max_iters. A cluster left empty by an assignment step takes the
// point farthest from its own centroid.
inline ClusteringResult kmeans_cluster(const std::vector<std::string>& ids, const Matrix& x, int k, std::uint64_t seed = 42,
                                       int max_iters = 300) {
  const std::size_t n = x.size();
  if (ids.size() != n) throw Error(ErrorKind::kDimension, "ids and vectors differ in count");
  if (k <= 0) throw Error(ErrorKind::kConfig, "k must be positive");
  if (static_cast<std::size_t>(k) > n)
    throw Error(ErrorKind::kConfig, "k=" + std::to_string(k) + " exceeds the number of points (" + std::to_string(n) + ")");
  const std::size_t kk = static_cast<std::size_t>(k);

  std::mt19937_64 rng(seed);
  ClusteringResult r;
  r.k = k;
  r.ids = ids;
  std::vector<bool> chosen(n, false);
  std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  r.centroids.push_back(x[first]);
  chosen[first] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = detail::sq_dist(x[i], x[first]);
  while (r.centroids.size() < kk) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
    std::size_t pick = n;
    if (total > 0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng), acc = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || d2[i] == 0) continue;
        acc += d2[i];
        pick = i;
        if (acc > u) break;
      }
    } else {
      for (std::size_t i = 0; i < n && pick == n; ++i)
        if (!chosen[i]) pick = i;
    }
    chosen[pick] = true;
    r.centroids.push_back(x[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], detail::sq_dist(x[i], x[pick]));
  }

  r.assignments.assign(n, -1);
  for (int it = 0; it < max_iters; ++it) {
    std::vector<int> next(n);
    std::vector<double> dist(n);
    std::vector<std::size_t> size(kk, 0);
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = static_cast<int>(detail::nearest_centroid(x[i], r.centroids, &dist[i]));
      ++size[static_cast<std::size_t>(next[i])];
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (size[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (size[static_cast<std::size_t>(next[i])] > 1 && (far == n || dist[i] > dist[far])) far = i;
      --size[static_cast<std::size_t>(next[far])];
      next[far] = static_cast<int>(c);
      dist[far] = 0.0;
      size[c] = 1;
      r.centroids[c] = x[far];
    }
    double inertia = 0;
    for (double d : dist) inertia += d;
    r.inertia_history.push_back(inertia);
    r.iterations = it + 1;
    bool same = next == r.assignments;
    r.assignments = std::move(next);
    Matrix sums(kk, std::vector<double>(x.front().size(), 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < x[i].size(); ++f) sums[static_cast<std::size_t>(r.assignments[i])][f] += x[i][f];
    for (std::size_t c = 0; c < kk; ++c)
      for (std::size_t f = 0; f < sums[c].size(); ++f) r.centroids[c][f] = sums[c][f] / static_cast<double>(size[c]);
    if (same) {
      r.converged = true;
      break;
    }
  }
  r.inertia = 0;
  for (std::size_t i = 0; i < n; ++i) r.inertia += detail::sq_dist(x[i], r.centroids[static_cast<std::size_t>(r.assignments[i])]);
  if (r.inertia != r.inertia_history.back()) r.inertia_history.push_back(r.inertia);
  return r;
}

// Per cluster: the member nearest the centroid paired with its nearest
// fellow members, up to `per_cluster_limit`, as IsSimilar with confidence
// 1 / (1 + distance).
inline std::vector<RelationPrediction> suggest_from_clusters(const ClusteringResult& r, const Matrix& x, int per_cluster_limit) {
  std::vector<RelationPrediction> out;
  for (int c = 0; c < r.k; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < r.assignments.size(); ++i)
      if (r.assignments[i] == c) members.push_back(i);
    if (members.size() < 2) continue;
    std::size_t anchor = members.front();
    for (std::size_t i : members)
      if (detail::sq_dist(x[i], r.centroids[static_cast<std::size_t>(c)]) <
          detail::sq_dist(x[anchor], r.centroids[static_cast<std::size_t>(c)]))
        anchor = i;
    std::vector<std::pair<double, std::size_t>> near;
    for (std::size_t i : members)
      if (i != anchor) near.push_back({std::sqrt(detail::sq_dist(x[i], x[anchor])), i});
    std::sort(near.begin(), near.end());
    for (std::size_t t = 0; t < near.size() && static_cast<int>(t) < per_cluster_limit; ++t)
      out.push_back(make_prediction(r.ids[anchor], r.ids[near[t].second], RelationType::IsSimilar, 1.0 / (1.0 + near[t].first),
                                    "cluster", {{"cluster", c}, {"distance", near[t].first}}));
  }
  sort_predictions(out);
  return out;
}

inline nlohmann::json clustering_to_json(const ClusteringResult& r) {
  nlohmann::json assign = nlohmann::json::object();
  for (std::size_t i = 0; i < r.ids.size(); ++i) assign[r.ids[i]] = r.assignments[i];
  return {{"k", r.k},
          {"assignments", assign},
          {"centroids", r.centroids},
          {"inertia", r.inertia},
          {"inertia_history", r.inertia_history},
          {"iterations", r.iterations},
          {"converged", r.converged}};
}

}  // namespace relx

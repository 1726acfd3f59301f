#pragma once

#include <string>
#include <vector>

#include "relx/corpus/relations.hpp"
#include "relx/learning/ensemble.hpp"
#include "relx/retrieval/prediction.hpp"

namespace relx {

struct LabeledExample {
  PairKey pair;
  std::vector<double> x;
  RelationType label = RelationType::None;
  Provenance provenance = Provenance::kGold;
};

struct UnlabeledExample {
  PairKey pair;
  std::vector<double> x;
};

struct WslResult {
  std::vector<LabeledExample> labeled;  // seed first, then pseudo-labels in assignment order
  std::vector<RelationPrediction> predictions;
  int iterations = 0;
  std::vector<int> pseudo_per_iteration;
};

// Pseudo-labeling loop: train the ensemble, adopt unanimous predictions on
// the remaining pool as pseudo-labels (immutable once assigned), retrain.
// Stops when an iteration adds nothing or after max_iters.
inline WslResult wsl_run(const std::vector<LabeledExample>& seed, const std::vector<UnlabeledExample>& pool,
                         EnsembleConfig config, int max_iters) {
  std::set<RelationType> classes;
  for (const auto& s : seed) classes.insert(s.label);
  if (classes.size() < 2) throw Error(ErrorKind::kDegenerateTraining, "WSL seed set needs at least two classes");
  config.vote = VoteRule::kUnanimous;
  WslResult r;
  r.labeled = seed;
  std::vector<bool> taken(pool.size(), false);
  for (int it = 0; it < max_iters; ++it) {
    Matrix x;
    std::vector<RelationType> y;
    for (const auto& l : r.labeled) {
      x.push_back(l.x);
      y.push_back(l.label);
    }
    Ensemble e = train_ensemble(config, x, y);
    ++r.iterations;
    int added = 0;
    std::vector<LabeledExample> fresh;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      auto d = ensemble_predict(e, pool[i].x);
      if (!d.label) continue;
      taken[i] = true;
      ++added;
      fresh.push_back({pool[i].pair, pool[i].x, *d.label, Provenance::kPredicted});
      r.predictions.push_back(make_prediction(pool[i].pair.source, pool[i].pair.target, *d.label, d.confidence, "wsl",
                                              {{"iteration", it}, {"votes", votes_to_json(d.votes)}}));
    }
    r.pseudo_per_iteration.push_back(added);
    r.labeled.insert(r.labeled.end(), fresh.begin(), fresh.end());
    if (added == 0) break;
  }
  sort_predictions(r.predictions);
  return r;
}

}  // namespace relx

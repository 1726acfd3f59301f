#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "relx/corpus/pairs.hpp"
#include "relx/eval/metrics.hpp"
#include "relx/eval/timing.hpp"

namespace relx {

struct CrossValidationResult {
  MetricsReport pooled;
  std::vector<MetricsReport> per_fold;
  std::map<PairKey, std::pair<RelationType, double>> predictions;  // pooled
};

// Trainer: train-set indexes -> Model. Predictor: (model, test-set indexes)
// -> one (label, confidence) per test index. Failures abort with the fold
// index in the message.
template <typename Model>
CrossValidationResult cross_validate(const std::vector<LabeledPair>& dataset, const FoldAssignment& folds,
                                     const std::function<Model(const std::vector<std::size_t>&)>& trainer,
                                     const std::function<std::vector<std::pair<RelationType, double>>(
                                         const Model&, const std::vector<std::size_t>&)>& predictor,
                                     std::vector<RelationType> classes = {}) {
  LabelMap gold;
  for (const auto& p : dataset) gold[canonical_pair(p.pair)] = p.label;
  if (classes.empty()) classes = classes_of(gold, {});
  auto fold_sets = folds.folds(dataset);
  CrossValidationResult r;
  Timings total;
  nlohmann::json fold_json = nlohmann::json::array();
  for (std::size_t f = 0; f < fold_sets.size(); ++f) {
    const auto& test = fold_sets[f];
    std::vector<bool> in_test(dataset.size(), false);
    for (auto i : test) in_test[i] = true;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < dataset.size(); ++i)
      if (!in_test[i]) train.push_back(i);
    Timings t;
    std::vector<std::pair<RelationType, double>> out;
    try {
      auto [model, train_ms] = time_run("train", [&] { return trainer(train); }, &t);
      out = time_run("inference", [&] { return predictor(model, test); }, &t).first;
    } catch (const Error& e) {
      throw Error(e.kind(), "fold " + std::to_string(f) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kState, "fold " + std::to_string(f) + ": " + e.what());
    }
    if (out.size() != test.size()) throw Error(ErrorKind::kState, "fold " + std::to_string(f) + ": predictor returned wrong count");
    LabelMap fold_gold;
    std::map<PairKey, std::pair<RelationType, double>> fold_pred;
    for (std::size_t i = 0; i < test.size(); ++i) {
      PairKey k = canonical_pair(dataset[test[i]].pair);
      fold_gold[k] = dataset[test[i]].label;
      fold_pred[k] = out[i];
      r.predictions[k] = out[i];
    }
    MetricsReport fr = evaluate(fold_gold, fold_pred, classes);
    fr.timings_ms = t;
    for (const auto& [k, v] : t) total[k] += v;
    fold_json.push_back({{"fold", f}, {"size", test.size()}, {"accuracy", fr.accuracy}, {"macro_f1", fr.macro_f1},
                         {"timings_ms", t}});
    r.per_fold.push_back(std::move(fr));
  }
  r.pooled = evaluate(gold, r.predictions, classes);
  r.pooled.timings_ms = total;
  r.pooled.folds = fold_json;
  return r;
}

}  // namespace relx

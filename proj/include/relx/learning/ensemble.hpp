#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relx/learning/classifiers.hpp"

namespace relx {

enum class VoteRule { kUnanimous, kMajority };
enum class ConfidenceRule { kMean, kMin };

struct EnsembleConfig {
  std::vector<ClassifierKind> members = {ClassifierKind::kNaiveBayes, ClassifierKind::kKnn, ClassifierKind::kLinearSvm};
  VoteRule vote = VoteRule::kUnanimous;
  ConfidenceRule confidence_rule = ConfidenceRule::kMean;
  nlohmann::json hyper = nlohmann::json::object();  // kind name -> hyperparameters
  std::uint64_t seed = 42;

  void validate() const {
    if (members.size() < 2) throw Error(ErrorKind::kConfig, "an ensemble needs at least 2 members");
  }

  static EnsembleConfig from_json(const nlohmann::json& j) {
    EnsembleConfig c;
    if (j.contains("members")) {
      c.members.clear();
      for (const auto& m : j.at("members")) c.members.push_back(parse_classifier_kind(m.get<std::string>()));
    }
    std::string vote = j.value("vote", std::string("unanimous"));
    if (vote == "unanimous") c.vote = VoteRule::kUnanimous;
    else if (vote == "majority") c.vote = VoteRule::kMajority;
    else throw Error(ErrorKind::kConfig, "unknown vote rule '" + vote + "'");
    std::string conf = j.value("confidence_rule", std::string("mean"));
    if (conf == "mean") c.confidence_rule = ConfidenceRule::kMean;
    else if (conf == "min") c.confidence_rule = ConfidenceRule::kMin;
    else throw Error(ErrorKind::kConfig, "unknown confidence rule '" + conf + "'");
    c.hyper = j.value("hyper", nlohmann::json::object());
    c.seed = j.value("seed", std::uint64_t{42});
    c.validate();
    return c;
  }

  nlohmann::json to_json() const {
    std::vector<std::string> m;
    for (auto k : members) m.push_back(to_string(k));
    return {{"members", m},
            {"vote", vote == VoteRule::kUnanimous ? "unanimous" : "majority"},
            {"confidence_rule", confidence_rule == ConfidenceRule::kMean ? "mean" : "min"},
            {"hyper", hyper},
            {"seed", seed}};
  }
};

struct Ensemble {
  EnsembleConfig config;
  std::vector<ClassifierModel> models;
};

inline Ensemble train_ensemble(const EnsembleConfig& config, const Matrix& x, const std::vector<RelationType>& y) {
  config.validate();
  Ensemble e{config, {}};
  for (auto kind : config.members)
    e.models.push_back(train_classifier(kind, x, y, config.hyper.value(to_string(kind), nlohmann::json::object()), config.seed));
  return e;
}

struct MemberVote {
  ClassifierKind kind;
  RelationType label;
  double probability;  // of `label`
};

struct EnsembleDecision {
  std::optional<RelationType> label;  // nullopt = abstain
  double confidence = 0.0;
  std::vector<MemberVote> votes;
};

// Unanimous: a label only when all members agree. Majority: most votes, ties
// by highest mean probability, then lexicographic class name. Confidence is
// the mean (or min) member probability of the chosen label; 0 on abstain.
inline EnsembleDecision ensemble_predict(const Ensemble& e, const std::vector<double>& x) {
  for (const auto& m : e.models)
    if (m.classes != e.models.front().classes) throw Error(ErrorKind::kConfig, "ensemble members trained on different class sets");
  const auto& classes = e.models.front().classes;
  std::vector<std::vector<double>> probas;
  EnsembleDecision d;
  for (const auto& m : e.models) {
    probas.push_back(predict_proba(m, x));
    const auto& p = probas.back();
    std::size_t best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    d.votes.push_back({m.kind, classes[best], p[best]});
  }
  auto confidence_for = [&](std::size_t cls) {
    double acc = e.config.confidence_rule == ConfidenceRule::kMean ? 0.0 : 1.0;
    for (const auto& p : probas) acc = e.config.confidence_rule == ConfidenceRule::kMean ? acc + p[cls] : std::min(acc, p[cls]);
    return e.config.confidence_rule == ConfidenceRule::kMean ? acc / static_cast<double>(probas.size()) : acc;
  };
  auto mean_prob = [&](std::size_t cls) {
    double s = 0;
    for (const auto& p : probas) s += p[cls];
    return s / static_cast<double>(probas.size());
  };
  std::map<RelationType, int> tally;
  for (const auto& v : d.votes) ++tally[v.label];
  std::optional<std::size_t> chosen;
  if (e.config.vote == VoteRule::kUnanimous) {
    if (tally.size() == 1) chosen = e.models.front().class_index(tally.begin()->first);
  } else {
    int top = 0;
    for (const auto& [t, n] : tally) top = std::max(top, n);
    for (const auto& [t, n] : tally) {
      if (n != top) continue;
      std::size_t idx = e.models.front().class_index(t);
      if (!chosen) {
        chosen = idx;
        continue;
      }
      double a = mean_prob(idx), b = mean_prob(*chosen);
      if (a > b || (a == b && to_string(t) < to_string(classes[*chosen]))) chosen = idx;
    }
  }
  if (chosen) {
    d.label = classes[*chosen];
    d.confidence = confidence_for(*chosen);
  }
  return d;
}

inline nlohmann::json votes_to_json(const std::vector<MemberVote>& votes) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& v : votes)
    j.push_back({{"member", to_string(v.kind)}, {"label", std::string(to_string(v.label))}, {"probability", v.probability}});
  return j;
}

}  // namespace relx

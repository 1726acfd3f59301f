#pragma once

#include <chrono>
#include <ctime>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "relx/learning/ensemble.hpp"
#include "relx/retrieval/prediction.hpp"

namespace relx {

enum class OracleKind { kHumanApi, kScriptedGold, kExternalTool };

inline std::string to_string(OracleKind o) {
  switch (o) {
    case OracleKind::kHumanApi: return "human_api";
    case OracleKind::kScriptedGold: return "scripted_gold";
    case OracleKind::kExternalTool: return "external_tool";
  }
  return "";
}

inline OracleKind parse_oracle_kind(const std::string& s) {
  if (s == "human_api") return OracleKind::kHumanApi;
  if (s == "scripted_gold") return OracleKind::kScriptedGold;
  if (s == "external_tool") return OracleKind::kExternalTool;
  throw Error(ErrorKind::kConfig, "unknown oracle '" + s + "'");
}

struct ALConfig {
  double low = 0.6;
  double high = 0.9;
  OracleKind oracle = OracleKind::kHumanApi;
  EnsembleConfig ensemble;

  void validate() const {
    if (!(low >= 0.0 && low <= high && high <= 1.0)) throw Error(ErrorKind::kConfig, "thresholds must satisfy 0 <= low <= high <= 1");
    ensemble.validate();
  }

  static ALConfig from_json(const nlohmann::json& j) {
    ALConfig c;
    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      if (t.is_array()) {
        c.low = t.at(0).get<double>();
        c.high = t.at(1).get<double>();
      } else {
        c.low = t.value("low", c.low);
        c.high = t.value("high", c.high);
      }
    }
    c.oracle = parse_oracle_kind(j.value("oracle", std::string("human_api")));
    if (j.contains("ensemble")) c.ensemble = EnsembleConfig::from_json(j.at("ensemble"));
    c.validate();
    return c;
  }

  nlohmann::json to_json() const {
    return {{"thresholds", {{"low", low}, {"high", high}}}, {"oracle", to_string(oracle)}, {"ensemble", ensemble.to_json()}};
  }
};

struct LabeledItem {
  std::string source, target;  // orientation as labeled
  RelationType label;
  std::string reason;  // seed | auto_accepted | oracle_labeled
};

struct OracleQuery {
  PairKey pair;
  double confidence = 0.0;
  std::optional<RelationType> predicted;
  nlohmann::json votes = nlohmann::json::array();
};

// Actions: auto_accepted and oracle_labeled move a pair out of the unlabeled
// pool; query_issued parks a query; step_completed closes an iteration;
// completed marks convergence.
struct AuditEvent {
  int iter = 0;
  std::string action;
  std::optional<PairKey> pair;  // oriented as labeled
  std::optional<RelationType> label;
  double confidence = 0.0;
  std::string timestamp;
  nlohmann::json votes = nlohmann::json();

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["iter"] = iter;
    j["pair"] = pair ? nlohmann::ordered_json::array({pair->source, pair->target}) : nlohmann::ordered_json();
    j["action"] = action;
    j["label"] = label ? nlohmann::ordered_json(std::string(to_string(*label))) : nlohmann::ordered_json();
    j["confidence"] = confidence;
    j["timestamp"] = timestamp;
    if (!votes.is_null()) j["votes"] = nlohmann::ordered_json::parse(votes.dump());
    return j;
  }

  static AuditEvent from_json(const nlohmann::json& j) {
    AuditEvent e;
    e.iter = j.at("iter").get<int>();
    e.action = j.at("action").get<std::string>();
    if (!j.at("pair").is_null()) e.pair = PairKey{j.at("pair").at(0).get<std::string>(), j.at("pair").at(1).get<std::string>()};
    if (!j.at("label").is_null()) e.label = relation_type_from(j.at("label").get<std::string>());
    e.confidence = j.value("confidence", 0.0);
    e.timestamp = j.value("timestamp", std::string());
    if (j.contains("votes")) e.votes = j.at("votes");
    static const std::set<std::string> kActions = {"auto_accepted", "oracle_labeled", "query_issued", "step_completed", "completed"};
    if (!kActions.count(e.action)) throw Error(ErrorKind::kParse, "unknown audit action '" + e.action + "'");
    return e;
  }
};

inline AuditEvent make_event(int iter, std::string action, std::optional<PairKey> pair = std::nullopt,
                             std::optional<RelationType> label = std::nullopt, double confidence = 0.0) {
  AuditEvent e;
  e.iter = iter;
  e.action = std::move(action);
  e.pair = std::move(pair);
  e.label = label;
  e.confidence = confidence;
  return e;
}

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Single-writer active-learning state machine. All state changes go through
// apply(), so a session is fully determined by its creation parameters and
// its audit events.
class ALSession {
 public:
  using FeatureMap = std::map<PairKey, std::vector<double>>;

  ALSession(std::string id, ALConfig config, const std::vector<RelationInstance>& seed, const std::set<PairKey>& unlabeled,
            FeatureMap features, std::map<PairKey, RelationInstance> gold = {})
      : id_(std::move(id)), config_(std::move(config)), features_(std::move(features)), gold_(std::move(gold)) {
    config_.validate();
    for (const auto& s : seed) {
      PairKey k = canonical_pair(s.source_id, s.target_id);
      labeled_[k] = {s.source_id, s.target_id, s.rtype, "seed"};
    }
    for (const auto& p : unlabeled) {
      PairKey k = canonical_pair(p);
      if (!labeled_.count(k)) unlabeled_.insert(k);
    }
    for (const auto& k : unlabeled_)
      if (!features_.count(k)) throw Error(ErrorKind::kNotFound, "no features for pair " + k.str());
    for (const auto& [k, l] : labeled_)
      if (!features_.count(k)) throw Error(ErrorKind::kNotFound, "no features for pair " + k.str());
  }

  void set_clock(std::function<std::string()> clock) { clock_ = std::move(clock); }

  const std::string& id() const { return id_; }
  const ALConfig& config() const { return config_; }
  const std::map<PairKey, LabeledItem>& labeled() const { return labeled_; }
  const std::set<PairKey>& unlabeled() const { return unlabeled_; }
  const std::vector<AuditEvent>& audit() const { return audit_; }
  const std::optional<OracleQuery>& pending() const { return pending_; }
  int iteration() const { return iteration_; }
  bool complete() const { return complete_; }

  // Applies one event; the only mutator of pools, query and iteration.
  void apply(const AuditEvent& e) {
    if (e.action == "auto_accepted" || e.action == "oracle_labeled") {
      if (!e.pair || !e.label) throw Error(ErrorKind::kParse, "audit event '" + e.action + "' lacks pair or label");
      PairKey k = canonical_pair(*e.pair);
      if (!unlabeled_.erase(k)) throw Error(ErrorKind::kState, "pair " + k.str() + " is not in the unlabeled pool");
      labeled_[k] = {e.pair->source, e.pair->target, *e.label, e.action};
      if (pending_ && pending_->pair == k) pending_.reset();
    } else if (e.action == "query_issued") {
      if (!e.pair) throw Error(ErrorKind::kParse, "query event lacks pair");
      PairKey k = canonical_pair(*e.pair);
      if (!unlabeled_.count(k)) throw Error(ErrorKind::kState, "queried pair " + k.str() + " is not unlabeled");
      pending_ = OracleQuery{k, e.confidence, e.label, e.votes.is_null() ? nlohmann::json::array() : e.votes};
    } else if (e.action == "step_completed") {
      iteration_ = e.iter + 1;
    } else if (e.action == "completed") {
      complete_ = true;
    } else {
      throw Error(ErrorKind::kParse, "unknown audit action '" + e.action + "'");
    }
    audit_.push_back(e);
    if (listener_) listener_(e);
  }

  // Called after every applied event (used for persistence).
  void on_event(std::function<void(const AuditEvent&)> listener) { listener_ = std::move(listener); }

  // One iteration: retrain on the labeled pool, auto-accept predictions with
  // confidence above `high`, and query the least confident pair below `low`.
  // A pending human query blocks further steps until labeled.
  std::optional<OracleQuery> step() {
    if (complete_ || pending_) return pending_;
    const int iter = iteration_;
    if (unlabeled_.empty()) {
      emit(make_event(iter, "completed"));
      return std::nullopt;
    }
    Matrix x;
    std::vector<RelationType> y;
    for (const auto& [k, l] : labeled_) {
      x.push_back(features_.at(k));
      y.push_back(l.label);
    }
    Ensemble model = train_ensemble(config_.ensemble, x, y);

    std::vector<std::pair<PairKey, EnsembleDecision>> scored;
    for (const auto& k : unlabeled_) scored.push_back({k, ensemble_predict(model, features_.at(k))});
    bool changed = false;
    std::optional<std::pair<PairKey, EnsembleDecision>> query;
    for (auto& [k, d] : scored) {
      if (d.label && d.confidence > config_.high) {
        AuditEvent e = make_event(iter, "auto_accepted", k, d.label, d.confidence);
        e.votes = votes_to_json(d.votes);
        emit(std::move(e));
        changed = true;
      } else if (d.confidence < config_.low && (!query || d.confidence < query->second.confidence)) {
        query = {k, d};
      }
    }
    if (query) {
      AuditEvent q = make_event(iter, "query_issued", query->first, query->second.label, query->second.confidence);
      q.votes = votes_to_json(query->second.votes);
      emit(std::move(q));
      changed = true;
      if (config_.oracle == OracleKind::kScriptedGold) {
        auto [source, target, label] = gold_label(query->first);
        emit(make_event(iter, "oracle_labeled", PairKey{source, target}, label, 1.0));
      }
    }
    emit(make_event(iter, "step_completed"));
    if (!changed || unlabeled_.empty()) emit(make_event(iteration_, "completed"));
    return pending_;
  }

  // Oracle answer for the pending query. `source_to_target` orients
  // unidirectional labels relative to the query pair's stored order.
  void label(const PairKey& pair, RelationType type, std::optional<bool> source_to_target) {
    PairKey k = canonical_pair(pair);
    if (!pending_) throw Error(ErrorKind::kConflict, "no pending query for session " + id_);
    if (pending_->pair != k) throw Error(ErrorKind::kConflict, "pair " + k.str() + " is not the pending query");
    std::string source = pair.source, target = pair.target;
    if (direction_of(type) == Direction::Unidirectional) {
      if (!source_to_target) throw Error(ErrorKind::kConfig, "direction required for '" + std::string(to_string(type)) + "'");
      if (!*source_to_target) std::swap(source, target);
    } else {
      source = k.source;
      target = k.target;
    }
    emit(make_event(iteration_, "oracle_labeled", PairKey{source, target}, type, 1.0));
  }

  nlohmann::json state_json() const {
    nlohmann::json j;
    j["session_id"] = id_;
    j["iteration"] = iteration_;
    j["complete"] = complete_;
    j["labeled"] = labeled_.size();
    j["unlabeled"] = unlabeled_.size();
    std::map<std::string, int> by_reason;
    for (const auto& [k, l] : labeled_) ++by_reason[l.reason];
    j["labeled_by_reason"] = by_reason;
    j["thresholds"] = {{"low", config_.low}, {"high", config_.high}};
    j["oracle"] = to_string(config_.oracle);
    j["pending"] = pending_ ? nlohmann::json{{"source", pending_->pair.source}, {"target", pending_->pair.target},
                                             {"confidence", pending_->confidence}}
                            : nlohmann::json();
    return j;
  }

  std::string audit_jsonl() const {
    std::string out;
    for (const auto& e : audit_) out += e.to_json().dump() + "\n";
    return out;
  }

 private:
  void emit(AuditEvent e) {
    if (e.timestamp.empty()) e.timestamp = clock_ ? clock_() : utc_timestamp();
    apply(e);
  }

  std::tuple<std::string, std::string, RelationType> gold_label(const PairKey& k) const {
    auto it = gold_.find(k);
    if (it == gold_.end()) return {k.source, k.target, RelationType::None};
    return {it->second.source_id, it->second.target_id, it->second.rtype};
  }

  std::string id_;
  ALConfig config_;
  FeatureMap features_;
  std::map<PairKey, RelationInstance> gold_;
  std::map<PairKey, LabeledItem> labeled_;
  std::set<PairKey> unlabeled_;
  std::optional<OracleQuery> pending_;
  std::vector<AuditEvent> audit_;
  int iteration_ = 0;
  bool complete_ = false;
  std::function<std::string()> clock_;
  std::function<void(const AuditEvent&)> listener_;
};

// Rebuilds a session from its creation parameters and audit log content.
inline ALSession replay_session(ALSession fresh, std::string_view audit_jsonl, const std::string& source = "<audit>") {
  auto lines = lines_of(audit_jsonl);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    try {
      fresh.apply(AuditEvent::from_json(nlohmann::json::parse(lines[i])));
    } catch (const nlohmann::json::exception& e) {
      throw line_error(ErrorKind::kParse, source, i + 1, e.what());
    } catch (const Error& e) {
      throw line_error(e.kind(), source, i + 1, e.what());
    }
  }
  return fresh;
}

}  // namespace relx

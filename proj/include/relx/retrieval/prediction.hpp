#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "relx/corpus/corpus.hpp"
#include "relx/corpus/relations.hpp"
#include "relx/corpus/types.hpp"
#include "relx/error.hpp"

namespace relx {

struct RelationPrediction {
  std::string source_id;
  std::string target_id;
  RelationType rtype = RelationType::None;
  double confidence = 0.0;
  std::string method;
  nlohmann::json evidence = nlohmann::json::object();

  PairKey pair() const { return canonical_pair(source_id, target_id); }
};

// Clamps confidence into [0, 1] and stores bidirectional types with
// source_id < target_id.
inline RelationPrediction make_prediction(std::string source, std::string target, RelationType rtype, double confidence,
                                          std::string method, nlohmann::json evidence = nlohmann::json::object()) {
  if (direction_of(rtype) == Direction::Bidirectional && target < source) std::swap(source, target);
  RelationPrediction p{std::move(source), std::move(target), rtype, std::clamp(confidence, 0.0, 1.0), std::move(method),
                       std::move(evidence)};
  return p;
}

inline void sort_predictions(std::vector<RelationPrediction>& preds) {
  std::sort(preds.begin(), preds.end(), [](const RelationPrediction& a, const RelationPrediction& b) {
    return std::tie(a.source_id, a.target_id, a.method, a.rtype) < std::tie(b.source_id, b.target_id, b.method, b.rtype);
  });
}

inline nlohmann::ordered_json prediction_to_json(const RelationPrediction& p) {
  nlohmann::ordered_json j;
  j["source"] = p.source_id;
  j["target"] = p.target_id;
  j["type"] = std::string(to_string(p.rtype));
  j["confidence"] = p.confidence;
  j["method"] = p.method;
  j["evidence"] = nlohmann::ordered_json::parse(p.evidence.dump());
  return j;
}

inline std::string predictions_to_jsonl(const std::vector<RelationPrediction>& preds) {
  std::string out;
  for (const auto& p : preds) {
    out += prediction_to_json(p).dump();
    out += '\n';
  }
  return out;
}

// Validates ids against `corpus` when given.
inline std::vector<RelationPrediction> parse_predictions_jsonl(std::string_view content, const Corpus* corpus = nullptr,
                                                               const std::string& source = "<predictions>") {
  std::vector<RelationPrediction> out;
  auto lines = lines_of(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw line_error(ErrorKind::kParse, source, i + 1, e.what());
    }
    if (!j.is_object()) throw line_error(ErrorKind::kParse, source, i + 1, "expected a JSON object");
    RelationPrediction p;
    p.source_id = detail::require_string(j, "source", source, i + 1);
    p.target_id = detail::require_string(j, "target", source, i + 1);
    std::string label = detail::require_string(j, "type", source, i + 1);
    auto parsed = parse_relation_label(label);
    if (!parsed) throw line_error(ErrorKind::kUnknownLabel, source, i + 1, "unknown relation label '" + label + "'");
    p.rtype = parsed->type;
    p.confidence = j.value("confidence", 1.0);
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0))
      throw line_error(ErrorKind::kParse, source, i + 1, "confidence outside [0, 1]");
    p.method = j.value("method", std::string());
    if (j.contains("evidence")) p.evidence = j.at("evidence");
    if (corpus) {
      for (const auto* id : {&p.source_id, &p.target_id})
        if (!corpus->contains(*id)) throw line_error(ErrorKind::kUnknownId, source, i + 1, "unknown requirement id '" + *id + "'");
    }
    if (direction_of(p.rtype) == Direction::Bidirectional && p.target_id < p.source_id) std::swap(p.source_id, p.target_id);
    out.push_back(std::move(p));
  }
  return out;
}

// One decision per unordered pair: highest confidence wins, ties go to the
// earlier type in declaration order.
inline std::map<PairKey, const RelationPrediction*> best_per_pair(const std::vector<RelationPrediction>& preds) {
  std::map<PairKey, const RelationPrediction*> best;
  for (const auto& p : preds) {
    auto [it, fresh] = best.emplace(p.pair(), &p);
    if (fresh) continue;
    const RelationPrediction* cur = it->second;
    if (p.confidence > cur->confidence || (p.confidence == cur->confidence && p.rtype < cur->rtype)) it->second = &p;
  }
  return best;
}

}  // namespace relx

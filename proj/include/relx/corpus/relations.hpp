#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "relx/corpus/corpus.hpp"
#include "relx/corpus/types.hpp"

namespace relx {

enum class Provenance { kGold, kPredicted };

struct RelationInstance {
  std::string source_id;
  std::string target_id;
  RelationType rtype = RelationType::None;
  Provenance provenance = Provenance::kGold;

  bool operator==(const RelationInstance&) const = default;

  // Unordered identity of the pair, used as evaluation key.
  PairKey pair() const { return canonical_pair(source_id, target_id); }
};

// Bidirectional instances are stored with source_id < target_id.
inline RelationInstance canonicalize(RelationInstance r) {
  if (direction_of(r.rtype) == Direction::Bidirectional && r.target_id < r.source_id)
    std::swap(r.source_id, r.target_id);
  return r;
}

struct RelationSet {
  std::vector<RelationInstance> instances;
  // When true, unlabeled candidate pairs count as None during training and
  // evaluation; otherwise they are unknown and excluded.
  bool complete = false;
  std::vector<std::string> warnings;

  std::map<RelationType, std::size_t> counts() const {
    std::map<RelationType, std::size_t> c;
    for (const auto& r : instances) ++c[r.rtype];
    return c;
  }
  std::size_t count(RelationType t) const {
    auto c = counts();
    auto it = c.find(t);
    return it == c.end() ? 0 : it->second;
  }
  std::size_t related() const { return instances.size() - count(RelationType::None); }

  // Unordered pair -> type map.
  std::map<PairKey, RelationType> as_map() const {
    std::map<PairKey, RelationType> m;
    for (const auto& r : instances) m[r.pair()] = r.rtype;
    return m;
  }
};

namespace detail {

struct RawRelation {
  std::string source, target, label;
  std::size_t line;
};

inline RelationSet build_relation_set(const std::vector<RawRelation>& raw, const Corpus& corpus,
                                      const std::string& source) {
  RelationSet set;
  std::size_t aliased = 0;
  std::map<PairKey, std::size_t> seen;
  for (const auto& r : raw) {
    if (!corpus.contains(r.source))
      throw line_error(ErrorKind::kUnknownId, source, r.line, "unknown requirement id '" + r.source + "'");
    if (!corpus.contains(r.target))
      throw line_error(ErrorKind::kUnknownId, source, r.line, "unknown requirement id '" + r.target + "'");
    if (r.source == r.target)
      throw line_error(ErrorKind::kParse, source, r.line, "self relation on '" + r.source + "'");
    auto label = parse_relation_label(r.label);
    if (!label) throw line_error(ErrorKind::kUnknownLabel, source, r.line, "unknown relation label '" + r.label + "'");
    if (label->was_alias) ++aliased;
    RelationInstance inst = canonicalize({r.source, r.target, label->type, Provenance::kGold});
    auto [it, fresh] = seen.emplace(inst.pair(), r.line);
    if (!fresh)
      throw line_error(ErrorKind::kDuplicateId, source, r.line,
                       "pair (" + inst.source_id + ", " + inst.target_id + ") already labeled on line " +
                           std::to_string(it->second));
    set.instances.push_back(std::move(inst));
  }
  if (aliased)
    set.warnings.push_back(std::to_string(aliased) + " 'refines' label(s) normalized to 'details'");
  return set;
}

}  // namespace detail

inline RelationSet parse_relation_set_jsonl(std::string_view content, const Corpus& corpus,
                                            const std::string& source = "<relations>") {
  std::vector<detail::RawRelation> raw;
  auto lines = lines_of(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw line_error(ErrorKind::kParse, source, i + 1, e.what());
    }
    if (!obj.is_object()) throw line_error(ErrorKind::kParse, source, i + 1, "expected a JSON object");
    raw.push_back({detail::require_string(obj, "source", source, i + 1),
                   detail::require_string(obj, "target", source, i + 1),
                   detail::require_string(obj, "type", source, i + 1), i + 1});
  }
  return detail::build_relation_set(raw, corpus, source);
}

inline RelationSet parse_relation_set_csv(std::string_view content, const Corpus& corpus, const CsvMapping& mapping,
                                          const std::string& source = "<relations.csv>") {
  auto records = parse_csv(content, source);
  std::vector<detail::RawRelation> raw;
  if (records.empty()) return {};
  const auto& header = records.front().fields;
  auto s = detail::resolve_column(mapping.source_col, header, "source_col");
  auto t = detail::resolve_column(mapping.target_col, header, "target_col");
  auto l = detail::resolve_column(mapping.label_col, header, "label_col");
  if (!s || !t || !l) throw Error(ErrorKind::kConfig, "CSV mapping needs source_col, target_col and label_col");
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() <= std::max({*s, *t, *l}))
      throw line_error(ErrorKind::kParse, source, rec.line, "row has " + std::to_string(rec.fields.size()) + " fields");
    std::string label(trim(rec.fields[*l]));
    if (auto it = mapping.label_map.find(label); it != mapping.label_map.end()) label = it->second;
    raw.push_back({std::string(trim(rec.fields[*s])), std::string(trim(rec.fields[*t])), label, rec.line});
  }
  return detail::build_relation_set(raw, corpus, source);
}

inline RelationSet load_relation_set(const std::filesystem::path& path, const Corpus& corpus,
                                     const std::optional<CsvMapping>& csv_mapping = std::nullopt) {
  std::string content = read_file(path);
  if (csv_mapping) return parse_relation_set_csv(content, corpus, *csv_mapping, path.string());
  return parse_relation_set_jsonl(content, corpus, path.string());
}

inline std::string relation_set_to_jsonl(const RelationSet& set) {
  std::string out;
  for (const auto& r : set.instances) {
    nlohmann::json j = {{"source", r.source_id}, {"target", r.target_id}, {"type", std::string(to_string(r.rtype))}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

// Per-type count summary, as printed by `relx load`.
inline nlohmann::json relation_counts_json(const RelationSet& set) {
  nlohmann::json j = nlohmann::json::object();
  j["total"] = set.instances.size();
  j["related"] = set.related();
  nlohmann::json by_type = nlohmann::json::object();
  for (auto [t, c] : set.counts()) by_type[std::string(to_string(t))] = c;
  j["by_type"] = by_type;
  if (!set.warnings.empty()) j["warnings"] = set.warnings;
  return j;
}

}  // namespace relx

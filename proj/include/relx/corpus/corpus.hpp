#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "relx/corpus/types.hpp"
#include "relx/error.hpp"
#include "relx/util.hpp"

namespace relx {

struct Requirement {
  std::string id;
  std::string text;
  std::string doc_id;
  int order_index = 0;
  std::map<std::string, std::string> metadata;
};

// Ordered, id-indexed set of requirements. Immutable once loaded.
class Corpus {
 public:
  Corpus() = default;

  // Throws kDuplicateId / kEmptyText / kState (order clash) on invariant violations.
  void add(Requirement r) {
    if (r.id.empty()) throw Error(ErrorKind::kParse, "requirement with empty id");
    if (index_.count(r.id)) throw Error(ErrorKind::kDuplicateId, "duplicate requirement id '" + r.id + "'");
    if (trim(r.text).empty()) throw Error(ErrorKind::kEmptyText, "requirement '" + r.id + "' has empty text");
    if (r.order_index < 0) throw Error(ErrorKind::kParse, "requirement '" + r.id + "' has negative order");
    auto& orders = orders_by_doc_[r.doc_id];
    if (!orders.insert(r.order_index).second)
      throw Error(ErrorKind::kState, "order " + std::to_string(r.order_index) + " of requirement '" + r.id +
                                         "' already used in document '" + r.doc_id + "'");
    index_.emplace(r.id, requirements_.size());
    requirements_.push_back(std::move(r));
  }

  std::size_t size() const { return requirements_.size(); }
  bool empty() const { return requirements_.empty(); }
  const Requirement& operator[](std::size_t i) const { return requirements_[i]; }
  const std::vector<Requirement>& requirements() const { return requirements_; }
  auto begin() const { return requirements_.begin(); }
  auto end() const { return requirements_.end(); }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  std::optional<std::size_t> index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const Requirement& at(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorKind::kUnknownId, "unknown requirement id '" + id + "'");
    return requirements_[it->second];
  }

  // Next unused order index within a document.
  int next_order(const std::string& doc_id) const {
    auto it = orders_by_doc_.find(doc_id);
    if (it == orders_by_doc_.end() || it->second.empty()) return 0;
    return *it->second.rbegin() + 1;
  }

 private:
  std::vector<Requirement> requirements_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::set<int>> orders_by_doc_;
};

enum class RequirementsFormat { kJsonl, kCsvMapped };

// Column mapping for CSV adapters. Columns are header names, or 0-based
// indexes when given as JSON numbers.
struct CsvMapping {
  nlohmann::json id_col, text_col, doc_col, source_col, target_col, label_col;
  std::map<std::string, std::string> label_map;

  static CsvMapping from_json(const nlohmann::json& j) {
    CsvMapping m;
    auto get = [&](const char* key) { return j.contains(key) ? j.at(key) : nlohmann::json(); };
    m.id_col = get("id_col");
    m.text_col = get("text_col");
    m.doc_col = get("doc_col");
    m.source_col = get("source_col");
    m.target_col = get("target_col");
    m.label_col = get("label_col");
    if (j.contains("label_map"))
      for (auto& [k, v] : j.at("label_map").items()) m.label_map[k] = v.get<std::string>();
    return m;
  }
};

namespace detail {

inline std::optional<std::size_t> resolve_column(const nlohmann::json& col, const std::vector<std::string>& header,
                                                 const char* what) {
  if (col.is_null()) return std::nullopt;
  if (col.is_number_integer()) return col.get<std::size_t>();
  std::string name = col.get<std::string>();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (trim(header[i]) == name) return i;
  throw Error(ErrorKind::kConfig, std::string("CSV column '") + name + "' (" + what + ") not found in header");
}

inline std::string require_string(const nlohmann::json& obj, const char* key, const std::string& source,
                                  std::size_t line) {
  if (!obj.contains(key) || !obj.at(key).is_string())
    throw line_error(ErrorKind::kParse, source, line, std::string("missing string field '") + key + "'");
  return obj.at(key).get<std::string>();
}

}  // namespace detail

inline Corpus parse_requirements_jsonl(std::string_view content, const std::string& source = "<jsonl>") {
  Corpus corpus;
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
    Requirement r;
    r.id = detail::require_string(obj, "id", source, i + 1);
    r.text = detail::require_string(obj, "text", source, i + 1);
    r.doc_id = obj.contains("doc") ? obj.at("doc").get<std::string>() : std::string();
    if (obj.contains("order")) {
      if (!obj.at("order").is_number_integer())
        throw line_error(ErrorKind::kParse, source, i + 1, "field 'order' must be an integer");
      r.order_index = obj.at("order").get<int>();
    } else {
      r.order_index = corpus.next_order(r.doc_id);
    }
    if (obj.contains("meta")) {
      if (!obj.at("meta").is_object()) throw line_error(ErrorKind::kParse, source, i + 1, "field 'meta' must be an object");
      for (auto& [k, v] : obj.at("meta").items())
        r.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    try {
      corpus.add(std::move(r));
    } catch (const Error& e) {
      throw line_error(e.kind(), source, i + 1, e.what());
    }
  }
  return corpus;
}

inline Corpus parse_requirements_csv(std::string_view content, const CsvMapping& mapping,
                                     const std::string& source = "<csv>") {
  Corpus corpus;
  auto records = parse_csv(content, source);
  if (records.empty()) return corpus;
  const auto& header = records.front().fields;
  auto id_col = detail::resolve_column(mapping.id_col, header, "id_col");
  auto text_col = detail::resolve_column(mapping.text_col, header, "text_col");
  auto doc_col = detail::resolve_column(mapping.doc_col, header, "doc_col");
  if (!id_col || !text_col) throw Error(ErrorKind::kConfig, "CSV mapping needs id_col and text_col");
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    std::size_t needed = std::max(*id_col, *text_col) + 1;
    if (doc_col) needed = std::max(needed, *doc_col + 1);
    if (rec.fields.size() < needed)
      throw line_error(ErrorKind::kParse, source, rec.line, "row has " + std::to_string(rec.fields.size()) + " fields");
    Requirement req;
    req.id = std::string(trim(rec.fields[*id_col]));
    req.text = rec.fields[*text_col];
    if (doc_col) req.doc_id = rec.fields[*doc_col];
    req.order_index = corpus.next_order(req.doc_id);
    try {
      corpus.add(std::move(req));
    } catch (const Error& e) {
      throw line_error(e.kind(), source, rec.line, e.what());
    }
  }
  return corpus;
}

// Loads a requirements file. For kCsvMapped a column mapping is required.
inline Corpus load_requirements(const std::filesystem::path& path, RequirementsFormat format = RequirementsFormat::kJsonl,
                                const std::optional<CsvMapping>& mapping = std::nullopt) {
  std::string content = read_file(path);
  if (format == RequirementsFormat::kJsonl) return parse_requirements_jsonl(content, path.string());
  if (!mapping) throw Error(ErrorKind::kConfig, "csv-mapped format needs a column mapping");
  return parse_requirements_csv(content, *mapping, path.string());
}

inline nlohmann::json requirement_to_json(const Requirement& r) {
  nlohmann::json j = {{"id", r.id}, {"doc", r.doc_id}, {"order", r.order_index}, {"text", r.text}};
  if (!r.metadata.empty()) j["meta"] = r.metadata;
  return j;
}

inline std::string requirements_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& r : corpus) {
    out += requirement_to_json(r).dump();
    out += '\n';
  }
  return out;
}

}  // namespace relx

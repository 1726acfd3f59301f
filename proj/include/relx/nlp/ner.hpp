#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "relx/error.hpp"
#include "relx/nlp/parsed.hpp"
#include "relx/nlp/preprocess.hpp"
#include "relx/util.hpp"

namespace relx {

// Term list for dictionary-based entity recognition. Terms are tokenized with
// the requirement tokenizer and matched case-insensitively.
class Gazetteer {
 public:
  struct Entry {
    std::vector<std::string> tokens;  // case-folded
    std::string entity_type;
    std::string canonical;
  };

  // TSV: term <TAB> entity_type <TAB> canonical. Blank lines and '#' comments skipped.
  static Gazetteer load(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

  static Gazetteer parse(std::string_view content, const std::string& source = "<gazetteer>") {
    Gazetteer g;
    auto lines = lines_of(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::string_view l = trim(lines[i]);
      if (l.empty() || l.front() == '#') continue;
      auto f = split(lines[i], '\t');
      if (f.size() != 3) throw line_error(ErrorKind::kParse, source, i + 1, "expected 'term<TAB>type<TAB>canonical'");
      for (auto& x : f) x = std::string(trim(x));
      if (f[0].empty() || f[1].empty() || f[2].empty()) throw line_error(ErrorKind::kParse, source, i + 1, "empty gazetteer field");
      g.add(f[0], f[1], f[2]);
    }
    return g;
  }

  void add(const std::string& term, const std::string& type, const std::string& canonical) {
    Entry e;
    for (const auto& w : detail::tokenize_words(term)) e.tokens.push_back(to_lower(w));
    if (e.tokens.empty()) return;
    e.entity_type = type;
    e.canonical = canonical;
    max_len_ = std::max(max_len_, e.tokens.size());
    by_first_[e.tokens.front()].push_back(std::move(e));
  }

  bool empty() const { return by_first_.empty(); }
  std::size_t max_length() const { return max_len_; }

  // Longest entry matching at token position `i`, if any.
  const Entry* longest_match(const std::vector<std::string>& folded, std::size_t i, std::size_t limit) const {
    auto it = by_first_.find(folded[i]);
    if (it == by_first_.end()) return nullptr;
    const Entry* best = nullptr;
    for (const Entry& e : it->second) {
      if (i + e.tokens.size() > limit) continue;
      bool ok = true;
      for (std::size_t k = 0; k < e.tokens.size() && ok; ++k) ok = folded[i + k] == e.tokens[k];
      if (ok && (!best || e.tokens.size() > best->tokens.size())) best = &e;
    }
    return best;
  }

 private:
  std::map<std::string, std::vector<Entry>> by_first_;
  std::size_t max_len_ = 0;
};

// Greedy left-to-right longest match over case-folded tokens inside each
// sentence; shorter overlapping matches are suppressed.
inline std::vector<EntityMention> recognize_entities(const ParsedRequirement& parsed, const Gazetteer& gazetteer) {
  std::vector<EntityMention> out;
  if (gazetteer.empty()) return out;
  std::vector<std::string> folded;
  folded.reserve(parsed.tokens.size());
  for (const auto& t : parsed.tokens) folded.push_back(to_lower(t.surface));
  std::vector<Span> sentences = parsed.sentences;
  if (sentences.empty() && !parsed.tokens.empty()) sentences.push_back({0, static_cast<int>(parsed.tokens.size())});
  for (const Span& s : sentences) {
    std::size_t i = static_cast<std::size_t>(s.begin);
    while (i < static_cast<std::size_t>(s.end)) {
      if (const auto* e = gazetteer.longest_match(folded, i, static_cast<std::size_t>(s.end))) {
        int b = static_cast<int>(i);
        out.push_back({{b, b + static_cast<int>(e->tokens.size())}, e->entity_type, e->canonical});
        i += e->tokens.size();
      } else {
        ++i;
      }
    }
  }
  return out;
}

inline std::vector<EntityMention> recognize_entities(const ParsedRequirement& parsed, const std::filesystem::path& path) {
  return recognize_entities(parsed, Gazetteer::load(path));
}

}  // namespace relx

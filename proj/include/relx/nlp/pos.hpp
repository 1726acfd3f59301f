#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "relx/error.hpp"
#include "relx/nlp/parsed.hpp"
#include "relx/util.hpp"

namespace relx {

inline const std::unordered_set<std::string>& universal_pos_tags() {
  static const std::unordered_set<std::string> tags = {"ADJ",  "ADP",   "ADV",  "AUX",   "CCONJ", "DET",
                                                       "INTJ", "NOUN",  "NUM",  "PART",  "PRON",  "PROPN",
                                                       "PUNCT", "SCONJ", "SYM", "VERB",  "X"};
  return tags;
}

inline bool is_universal_pos(std::string_view tag) { return universal_pos_tags().count(std::string(tag)) != 0; }

// Word -> tag frequency table. File format: one "word<TAB>TAG<TAB>count"
// entry per line; a word may appear on several lines.
class PosLexicon {
 public:
  static PosLexicon load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::kIo, "PoS lexicon not found: " + path.string());
    PosLexicon lex;
    auto lines = lines_of(read_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::string_view l = trim(lines[i]);
      if (l.empty() || l.front() == '#') continue;
      auto f = split(l, '\t');
      if (f.size() != 3) throw line_error(ErrorKind::kParse, path.string(), i + 1, "expected 'word<TAB>TAG<TAB>count'");
      if (!is_universal_pos(f[1])) throw line_error(ErrorKind::kParse, path.string(), i + 1, "unknown PoS tag '" + f[1] + "'");
      long count = 0;
      try {
        count = std::stol(f[2]);
      } catch (const std::exception&) {
        throw line_error(ErrorKind::kParse, path.string(), i + 1, "non-numeric count");
      }
      lex.add(f[0], f[1], count);
    }
    return lex;
  }

  void add(const std::string& word, const std::string& tag, long count) { counts_[to_lower(word)][tag] += count; }

  // Most frequent tag; ties resolve to the alphabetically first tag.
  std::optional<std::string> majority(const std::string& word) const {
    auto it = counts_.find(to_lower(word));
    if (it == counts_.end() || it->second.empty()) return std::nullopt;
    const std::string* best = nullptr;
    long best_count = -1;
    for (const auto& [tag, c] : it->second)
      if (c > best_count) {
        best = &tag;
        best_count = c;
      }
    return *best;
  }

  std::size_t size() const { return counts_.size(); }

 private:
  std::unordered_map<std::string, std::map<std::string, long>> counts_;
};

// Tag guess for out-of-lexicon words: shape first, then suffix table.
inline std::string suffix_rule_tag(std::string_view surface) {
  if (surface.empty()) return "X";
  if (!has_alnum(surface)) return "PUNCT";
  if (std::all_of(surface.begin(), surface.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == ','; }))
    return "NUM";
  bool all_upper = std::all_of(surface.begin(), surface.end(), [](char c) {
    return !std::isalpha(static_cast<unsigned char>(c)) || std::isupper(static_cast<unsigned char>(c));
  });
  if (all_upper && surface.size() >= 2) return "PROPN";
  static const std::pair<std::string_view, std::string_view> kSuffixes[] = {
      {"ish", "ADJ"},  {"ous", "ADJ"},  {"ful", "ADJ"},  {"less", "ADJ"}, {"able", "ADJ"}, {"ible", "ADJ"},
      {"ive", "ADJ"},  {"ical", "ADJ"}, {"al", "ADJ"},   {"ic", "ADJ"},   {"ly", "ADV"},   {"ing", "VERB"},
      {"ize", "VERB"}, {"ise", "VERB"}, {"ed", "VERB"},  {"tion", "NOUN"}, {"sion", "NOUN"}, {"ment", "NOUN"},
      {"ness", "NOUN"}, {"ity", "NOUN"}, {"ance", "NOUN"}, {"ence", "NOUN"}, {"er", "NOUN"}, {"or", "NOUN"}};
  std::string lower = to_lower(surface);
  for (auto [suf, tag] : kSuffixes)
    if (lower.size() > suf.size() + 1 && std::string_view(lower).substr(lower.size() - suf.size()) == suf)
      return std::string(tag);
  return "NOUN";
}

// Fills missing PoS tags from the lexicon's majority tag, falling back to
// suffix rules. Arcs are left untouched.
inline ParsedRequirement fallback_pos_tag(ParsedRequirement parsed, const PosLexicon& lexicon) {
  for (auto& t : parsed.tokens) {
    if (!t.pos.empty()) continue;
    if (auto tag = lexicon.majority(t.surface)) t.pos = *tag;
    else t.pos = suffix_rule_tag(t.surface);
  }
  return parsed;
}

inline ParsedRequirement fallback_pos_tag(ParsedRequirement parsed, const std::filesystem::path& lexicon_path) {
  return fallback_pos_tag(std::move(parsed), PosLexicon::load(lexicon_path));
}

}  // namespace relx

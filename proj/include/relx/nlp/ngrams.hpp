#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "relx/error.hpp"
#include "relx/nlp/parsed.hpp"
#include "relx/nlp/pos.hpp"
#include "relx/util.hpp"

namespace relx {

// A PoS pattern in hyphen notation, e.g. "NOUN-compound-NOUN" or
// "ADJ|NOUN+-NOUN". Upper-case elements are token slots (alternatives with
// '|', one-or-more with a trailing '+', '*' matches any tag); a lower-case
// element between two slots requires a dependency arc with that label
// between the two adjacent tokens (either direction).
class PosPattern {
 public:
  struct Slot {
    std::vector<std::string> tags;  // empty = wildcard
    bool repeat = false;
    std::string dep_to_next;  // label linking the last token of this slot to the next slot
  };

  static PosPattern parse(const std::string& text) {
    PosPattern p;
    p.text_ = text;
    for (const std::string& part : split(text, '-')) {
      if (part.empty()) throw Error(ErrorKind::kConfig, "empty element in PoS pattern '" + text + "'");
      bool is_dep = std::islower(static_cast<unsigned char>(part.front())) != 0;
      if (is_dep) {
        if (p.slots_.empty() || !p.slots_.back().dep_to_next.empty())
          throw Error(ErrorKind::kConfig, "dependency label '" + part + "' must sit between two slots in '" + text + "'");
        p.slots_.back().dep_to_next = part;
        p.has_deps_ = true;
        continue;
      }
      Slot s;
      std::string body = part;
      if (body.back() == '+') {
        s.repeat = true;
        body.pop_back();
      }
      if (body != "*") {
        for (const std::string& tag : split(body, '|')) {
          if (!is_universal_pos(tag)) throw Error(ErrorKind::kConfig, "unknown PoS label '" + tag + "' in pattern '" + text + "'");
          s.tags.push_back(tag);
        }
      }
      p.slots_.push_back(std::move(s));
    }
    if (p.slots_.empty()) throw Error(ErrorKind::kConfig, "empty PoS pattern");
    if (!p.slots_.back().dep_to_next.empty())
      throw Error(ErrorKind::kConfig, "PoS pattern '" + text + "' ends with a dependency label");
    return p;
  }

  const std::string& text() const { return text_; }
  const std::vector<Slot>& slots() const { return slots_; }
  bool has_deps() const { return has_deps_; }

  // End positions (exclusive) of all matches starting at `begin` within `limit`.
  std::vector<int> match_ends(const ParsedRequirement& p, int begin, int limit) const {
    std::vector<int> ends;
    match_from(p, 0, begin, limit, ends);
    std::sort(ends.begin(), ends.end());
    ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
    return ends;
  }

 private:
  static bool tag_ok(const Slot& s, const std::string& pos) {
    return s.tags.empty() || std::find(s.tags.begin(), s.tags.end(), pos) != s.tags.end();
  }

  static bool linked(const ParsedRequirement& p, int a, int b, const std::string& label) {
    for (const auto& arc : p.arcs)
      if (arc.dep_label == label &&
          ((arc.head_index == a && arc.child_index == b) || (arc.head_index == b && arc.child_index == a)))
        return true;
    return false;
  }

  void match_from(const ParsedRequirement& p, std::size_t slot, int pos, int limit, std::vector<int>& ends) const {
    if (slot == slots_.size()) {
      ends.push_back(pos);
      return;
    }
    const Slot& s = slots_[slot];
    int i = pos;
    while (i < limit && tag_ok(s, p.tokens[static_cast<std::size_t>(i)].pos)) {
      ++i;
      bool last_slot = slot + 1 == slots_.size();
      bool dep_ok = s.dep_to_next.empty() || (i < limit && linked(p, i - 1, i, s.dep_to_next));
      if (dep_ok || last_slot) match_from(p, slot + 1, i, limit, ends);
      if (!s.repeat) break;
    }
  }

  std::string text_;
  std::vector<Slot> slots_;
  bool has_deps_ = false;
};

namespace detail {

// Root of a span: the token whose head lies outside it. With arcs, spans that
// are not a single connected subtree have no root (returns -1). Without arcs
// the rightmost token is taken as head.
inline int span_root(const ParsedRequirement& p, const Span& span, const std::vector<int>& heads) {
  if (!p.has_arcs()) return span.end - 1;
  int root = -1;
  for (int i = span.begin; i < span.end; ++i) {
    int h = heads[static_cast<std::size_t>(i)];
    if (!span.contains(h)) {
      if (root != -1) return -1;
      root = i;
    }
  }
  return root;
}

}  // namespace detail

// All contiguous spans matching any pattern, nested matches included, within
// sentence boundaries; ordered by (start, length). Patterns with dependency
// labels are skipped when the parse has no arcs.
inline std::vector<NGram> extract_ngrams(const ParsedRequirement& parsed, const std::vector<PosPattern>& patterns) {
  std::set<std::pair<int, int>> spans;
  for (const Span& sentence : parsed.sentences) {
    for (const PosPattern& pat : patterns) {
      if (pat.has_deps() && !parsed.has_arcs()) continue;
      for (int b = sentence.begin; b < sentence.end; ++b)
        for (int e : pat.match_ends(parsed, b, sentence.end))
          if (e > b) spans.insert({b, e - b});
    }
  }
  auto heads = parsed.heads();
  std::vector<NGram> out;
  for (auto [b, len] : spans) {
    Span span{b, b + len};
    int root = detail::span_root(parsed, span, heads);
    if (root < 0) continue;
    out.push_back({span, root, parsed.lemmas_of(span)});
  }
  return out;
}

inline std::vector<NGram> extract_ngrams(const ParsedRequirement& parsed, const std::vector<std::string>& patterns) {
  std::vector<PosPattern> compiled;
  for (const auto& p : patterns) compiled.push_back(PosPattern::parse(p));
  return extract_ngrams(parsed, compiled);
}

// Default n-gram patterns: nominal compounds and adjective-noun chains.
inline const std::vector<std::string>& default_ngram_patterns() {
  static const std::vector<std::string> patterns = {"NOUN|PROPN", "ADJ|NOUN|PROPN+-NOUN|PROPN"};
  return patterns;
}

// Maximal runs of nominal tokens (NOUN, PROPN, PRON) with their left
// modifiers (ADJ, NOUN, PROPN); trailing modifiers are trimmed so each chunk
// ends in a nominal head.
inline std::vector<NGram> chunk_noun_phrases(const ParsedRequirement& parsed) {
  auto is_member = [](const std::string& pos) {
    return pos == "NOUN" || pos == "PROPN" || pos == "PRON" || pos == "ADJ";
  };
  auto is_head = [](const std::string& pos) { return pos == "NOUN" || pos == "PROPN" || pos == "PRON"; };
  std::vector<NGram> out;
  for (const Span& sentence : parsed.sentences) {
    int i = sentence.begin;
    while (i < sentence.end) {
      if (!is_member(parsed.tokens[static_cast<std::size_t>(i)].pos)) {
        ++i;
        continue;
      }
      int j = i;
      while (j < sentence.end && is_member(parsed.tokens[static_cast<std::size_t>(j)].pos)) ++j;
      int end = j;
      while (end > i && !is_head(parsed.tokens[static_cast<std::size_t>(end - 1)].pos)) --end;
      if (end > i) {
        Span span{i, end};
        out.push_back({span, end - 1, parsed.lemmas_of(span)});
      }
      i = j;
    }
  }
  return out;
}

}  // namespace relx

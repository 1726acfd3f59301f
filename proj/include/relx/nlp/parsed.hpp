#pragma once

#include <optional>
#include <string>
#include <vector>

namespace relx {

struct Token {
  int index = 0;
  std::string surface;
  std::string normalized;
  std::string lemma;
  std::string pos;  // universal PoS tag, empty when untagged
  bool is_stopword = false;
};

// Head index of the root arc of a sentence.
inline constexpr int kRootHead = -1;

struct DependencyArc {
  int head_index = kRootHead;
  int child_index = 0;
  std::string dep_label;

  bool is_root() const { return head_index == kRootHead; }
};

// Half-open token range [begin, end).
struct Span {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  bool contains(int i) const { return i >= begin && i < end; }
  bool overlaps(const Span& o) const { return begin < o.end && o.begin < end; }
  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

struct NGram {
  Span span;
  int root_index = 0;
  std::string label;  // space-joined lemmas
  bool operator==(const NGram&) const = default;
};

struct EntityMention {
  Span span;
  std::string entity_type;
  std::string canonical;
  bool operator==(const EntityMention&) const = default;
};

struct ParsedRequirement {
  std::string requirement_id;
  std::vector<Token> tokens;
  std::vector<DependencyArc> arcs;
  std::vector<Span> sentences;
  std::vector<NGram> ngrams;
  std::vector<EntityMention> mentions;
  bool empty_after_cleaning = false;

  bool has_arcs() const { return !arcs.empty(); }

  // Head of each token (kRootHead for roots, -2 when no arc covers it).
  std::vector<int> heads() const {
    std::vector<int> h(tokens.size(), -2);
    for (const auto& a : arcs) h[static_cast<std::size_t>(a.child_index)] = a.head_index;
    return h;
  }

  const DependencyArc* arc_of(int child) const {
    for (const auto& a : arcs)
      if (a.child_index == child) return &a;
    return nullptr;
  }

  std::optional<std::size_t> sentence_of(int token) const {
    for (std::size_t s = 0; s < sentences.size(); ++s)
      if (sentences[s].contains(token)) return s;
    return std::nullopt;
  }

  std::string text_of(const Span& s) const {
    std::string out;
    for (int i = s.begin; i < s.end; ++i) {
      if (i > s.begin) out += ' ';
      out += tokens[static_cast<std::size_t>(i)].surface;
    }
    return out;
  }

  std::string lemmas_of(const Span& s) const {
    std::string out;
    for (int i = s.begin; i < s.end; ++i) {
      if (i > s.begin) out += ' ';
      out += tokens[static_cast<std::size_t>(i)].lemma;
    }
    return out;
  }
};

}  // namespace relx

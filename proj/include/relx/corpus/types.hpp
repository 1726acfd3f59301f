#pragma once

#include <array>
#include <compare>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "relx/error.hpp"
#include "relx/util.hpp"

namespace relx {

// Relation types between two requirements. `Related` is the type-agnostic
// positive class used by binary (related / not related) annotation sets.
enum class RelationType {
  None,
  Requires,
  Conflicts,
  Contradicts,
  IsAVariant,
  IsSimilar,
  Details,
  Related,
};

inline constexpr std::array<RelationType, 8> kAllRelationTypes = {
    RelationType::None,      RelationType::Requires,   RelationType::Conflicts,
    RelationType::Contradicts, RelationType::IsAVariant, RelationType::IsSimilar,
    RelationType::Details,   RelationType::Related};

enum class Direction { Unidirectional, Bidirectional };

constexpr Direction direction_of(RelationType t) {
  switch (t) {
    case RelationType::Requires:
    case RelationType::Conflicts:
    case RelationType::Details:
      return Direction::Unidirectional;
    case RelationType::None:
    case RelationType::Contradicts:
    case RelationType::IsAVariant:
    case RelationType::IsSimilar:
    case RelationType::Related:
      return Direction::Bidirectional;
  }
  return Direction::Bidirectional;
}

// Wire name as used in the JSONL formats.
constexpr std::string_view to_string(RelationType t) {
  switch (t) {
    case RelationType::None: return "none";
    case RelationType::Requires: return "requires";
    case RelationType::Conflicts: return "conflicts";
    case RelationType::Contradicts: return "contradicts";
    case RelationType::IsAVariant: return "is_a_variant";
    case RelationType::IsSimilar: return "is_similar";
    case RelationType::Details: return "details";
    case RelationType::Related: return "related";
  }
  return "none";
}

struct ParsedLabel {
  RelationType type;
  bool was_alias;  // "refines" was normalized to Details
};

inline std::optional<ParsedLabel> parse_relation_label(std::string_view raw) {
  std::string s = to_lower(trim(raw));
  for (char& c : s)
    if (c == '-' || c == ' ') c = '_';
  if (s == "refines") return ParsedLabel{RelationType::Details, true};
  if (s == "isavariant" || s == "variant") return ParsedLabel{RelationType::IsAVariant, false};
  if (s == "issimilar" || s == "similar") return ParsedLabel{RelationType::IsSimilar, false};
  if (s == "require") return ParsedLabel{RelationType::Requires, false};
  for (RelationType t : kAllRelationTypes)
    if (s == to_string(t)) return ParsedLabel{t, false};
  return std::nullopt;
}

inline RelationType relation_type_from(std::string_view raw) {
  auto parsed = parse_relation_label(raw);
  if (!parsed) throw Error(ErrorKind::kUnknownLabel, "unknown relation label '" + std::string(raw) + "'");
  return parsed->type;
}

// A (source, target) pair of requirement ids. Ordered pairs keep the given
// orientation; unordered ones are stored with source < target.
struct PairKey {
  std::string source;
  std::string target;

  auto operator<=>(const PairKey&) const = default;
  bool operator==(const PairKey&) const = default;

  PairKey reversed() const { return {target, source}; }
  std::string str() const { return source + "|" + target; }
};

inline PairKey canonical_pair(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

inline PairKey canonical_pair(const PairKey& p) { return canonical_pair(p.source, p.target); }

struct PairKeyHash {
  std::size_t operator()(const PairKey& p) const noexcept {
    return static_cast<std::size_t>(fnv1a(p.target, fnv1a(p.source + '\x1f')));
  }
};

}  // namespace relx

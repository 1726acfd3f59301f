#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "relx/corpus/corpus.hpp"
#include "relx/nlp/ngrams.hpp"
#include "relx/nlp/parsed.hpp"
#include "relx/util.hpp"

namespace relx {

enum class CorefRule { kSynonymTable, kLocationPredecessor, kExactEntity };

inline std::string_view to_string(CorefRule r) {
  switch (r) {
    case CorefRule::kSynonymTable: return "synonym_table";
    case CorefRule::kLocationPredecessor: return "location_predecessor";
    case CorefRule::kExactEntity: return "exact_entity";
  }
  return "";
}

struct MentionRef {
  std::string requirement_id;
  Span span;
  bool operator==(const MentionRef&) const = default;
  auto operator<=>(const MentionRef&) const = default;
};

// `from` is the referring mention (later requirement), `to` its antecedent.
struct CoreferenceLink {
  MentionRef from;
  MentionRef to;
  CorefRule rule = CorefRule::kExactEntity;
  std::string key;  // canonical entity, synonym pair, or trigger phrase
  bool operator==(const CoreferenceLink&) const = default;
};

// Symmetric term-pair table. TSV: term_a <TAB> term_b.
class SynonymTable {
 public:
  static SynonymTable load(const std::filesystem::path& path) { return parse(read_file(path), path.string()); }

  static SynonymTable parse(std::string_view content, const std::string& source = "<synonyms>") {
    SynonymTable t;
    auto lines = lines_of(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::string_view l = trim(lines[i]);
      if (l.empty() || l.front() == '#') continue;
      auto f = split(lines[i], '\t');
      if (f.size() != 2 || trim(f[0]).empty() || trim(f[1]).empty())
        throw line_error(ErrorKind::kParse, source, i + 1, "expected 'term_a<TAB>term_b'");
      t.add(std::string(trim(f[0])), std::string(trim(f[1])));
    }
    return t;
  }

  void add(const std::string& a, const std::string& b) { pairs_.push_back({fold_term(a), fold_term(b)}); }

  const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& pairs() const { return pairs_; }
  bool empty() const { return pairs_.empty(); }

  static std::vector<std::string> fold_term(const std::string& term) {
    std::vector<std::string> out;
    for (const auto& w : detail::tokenize_words(term)) out.push_back(to_lower(w));
    return out;
  }

 private:
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs_;
};

struct CorefConfig {
  // Definite generic noun phrases that refer back to the preceding requirement.
  std::vector<std::string> generic_triggers = {"the function", "the system", "the information"};
  // Entity type accepted as antecedent of a generic trigger.
  std::string antecedent_entity_type = "Component";
};

namespace detail {

// First occurrence of a folded term (by surface or lemma) in a parse.
inline std::optional<Span> find_term(const ParsedRequirement& p, const std::vector<std::string>& term) {
  if (term.empty() || term.size() > p.tokens.size()) return std::nullopt;
  for (std::size_t i = 0; i + term.size() <= p.tokens.size(); ++i) {
    bool surface_ok = true, lemma_ok = true;
    for (std::size_t k = 0; k < term.size(); ++k) {
      const Token& t = p.tokens[i + k];
      surface_ok = surface_ok && to_lower(t.surface) == term[k];
      lemma_ok = lemma_ok && t.lemma == term[k];
    }
    if (surface_ok || lemma_ok) return Span{static_cast<int>(i), static_cast<int>(i + term.size())};
  }
  return std::nullopt;
}

// Subtree span of the nominal subject of the first sentence's root, without
// leading determiners. Requires arcs.
inline std::optional<Span> root_subject_span(const ParsedRequirement& p) {
  if (!p.has_arcs() || p.sentences.empty()) return std::nullopt;
  const Span& s = p.sentences.front();
  int root = -1;
  for (const auto& a : p.arcs)
    if (a.is_root() && s.contains(a.child_index)) root = a.child_index;
  if (root < 0) return std::nullopt;
  int subj = -1;
  for (const auto& a : p.arcs)
    if (a.head_index == root && (a.dep_label == "nsubj" || a.dep_label == "nsubj:pass")) {
      subj = a.child_index;
      break;
    }
  if (subj < 0) return std::nullopt;
  auto heads = p.heads();
  auto in_subtree = [&](int t) {
    for (int cur = t, steps = 0; cur >= 0 && steps <= static_cast<int>(heads.size()); cur = heads[static_cast<std::size_t>(cur)], ++steps)
      if (cur == subj) return true;
    return false;
  };
  int b = subj, e = subj + 1;
  for (int t = s.begin; t < s.end; ++t)
    if (in_subtree(t)) {
      b = std::min(b, t);
      e = std::max(e, t + 1);
    }
  while (b < e - 1 && p.tokens[static_cast<std::size_t>(b)].pos == "DET") ++b;
  return Span{b, e};
}

}  // namespace detail

// Rule-based cross-document coreference over a corpus snapshot. `parses` must
// be in corpus order and carry entity mentions. Output is deterministic.
inline std::vector<CoreferenceLink> resolve_coreferences(const Corpus& corpus, const std::vector<ParsedRequirement>& parses,
                                                         const SynonymTable& synonyms, const CorefConfig& config = {}) {
  std::vector<CoreferenceLink> links;
  const std::size_t n = parses.size();

  // exact_entity: first mention of each canonical per requirement.
  std::vector<std::map<std::string, Span>> first_mention(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& m : parses[i].mentions) first_mention[i].emplace(m.canonical, m.span);
  std::map<std::string, std::vector<std::size_t>> holders;
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [canon, span] : first_mention[i]) holders[canon].push_back(i);
  for (const auto& [canon, reqs] : holders)
    for (std::size_t a = 0; a < reqs.size(); ++a)
      for (std::size_t b = a + 1; b < reqs.size(); ++b) {
        std::size_t earlier = reqs[a], later = reqs[b];
        links.push_back({{parses[later].requirement_id, first_mention[later].at(canon)},
                         {parses[earlier].requirement_id, first_mention[earlier].at(canon)},
                         CorefRule::kExactEntity,
                         canon});
      }

  // synonym_table: term_a in one requirement, term_b in another.
  for (const auto& [ta, tb] : synonyms.pairs()) {
    std::vector<std::optional<Span>> hit_a(n), hit_b(n);
    for (std::size_t i = 0; i < n; ++i) {
      hit_a[i] = detail::find_term(parses[i], ta);
      hit_b[i] = detail::find_term(parses[i], tb);
    }
    std::string key = join(ta, " ") + " <-> " + join(tb, " ");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || !hit_a[i] || !hit_b[j]) continue;
        std::size_t later = std::max(i, j), earlier = std::min(i, j);
        const Span& later_span = later == i ? *hit_a[i] : *hit_b[j];
        const Span& earlier_span = earlier == i ? *hit_a[i] : *hit_b[j];
        links.push_back({{parses[later].requirement_id, later_span},
                         {parses[earlier].requirement_id, earlier_span},
                         CorefRule::kSynonymTable,
                         key});
      }
  }

  // location_predecessor: a generic trigger refers to the nearest preceding
  // requirement of the same document that offers an antecedent.
  std::vector<std::vector<std::string>> triggers;
  for (const auto& t : config.generic_triggers) triggers.push_back(SynonymTable::fold_term(t));
  for (std::size_t i = 0; i < n; ++i) {
    const Requirement& ri = corpus.at(parses[i].requirement_id);
    for (std::size_t t = 0; t < triggers.size(); ++t) {
      auto span = detail::find_term(parses[i], triggers[t]);
      if (!span) continue;
      std::optional<std::size_t> best;
      std::optional<Span> antecedent;
      int best_order = -1;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const Requirement& rj = corpus.at(parses[j].requirement_id);
        if (rj.doc_id != ri.doc_id || rj.order_index >= ri.order_index || rj.order_index <= best_order) continue;
        std::optional<Span> cand = detail::root_subject_span(parses[j]);
        if (!cand)
          for (const auto& m : parses[j].mentions)
            if (m.entity_type == config.antecedent_entity_type) {
              cand = m.span;
              break;
            }
        if (cand) {
          best = j;
          antecedent = cand;
          best_order = rj.order_index;
        }
      }
      if (best)
        links.push_back({{parses[i].requirement_id, *span},
                         {parses[*best].requirement_id, *antecedent},
                         CorefRule::kLocationPredecessor,
                         config.generic_triggers[t]});
    }
  }
  return links;
}

}  // namespace relx

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relx/corpus/corpus.hpp"
#include "relx/nlp/conllu.hpp"
#include "relx/nlp/coref.hpp"
#include "relx/nlp/ner.hpp"
#include "relx/nlp/ngrams.hpp"
#include "relx/nlp/pos.hpp"
#include "relx/nlp/preprocess.hpp"

namespace relx {

struct PipelineResources {
  PreprocessConfig preprocess;
  std::optional<PosLexicon> lexicon;  // fills PoS of requirements without ingested parses
  Gazetteer gazetteer;
  SynonymTable synonyms;
  CorefConfig coref;
  std::vector<PosPattern> ngram_patterns;
};

// Parses with n-grams and mentions, noun chunks, and coreference links for
// one corpus snapshot. Vectors are in corpus order.
struct AnalyzedCorpus {
  std::vector<ParsedRequirement> parses;
  std::vector<std::vector<NGram>> chunks;
  std::vector<CoreferenceLink> coref;

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < parses.size(); ++i)
      if (parses[i].requirement_id == id) return i;
    throw Error(ErrorKind::kUnknownId, "unknown requirement id '" + id + "'");
  }
};

inline AnalyzedCorpus analyze(const Corpus& corpus, std::map<std::string, ParsedRequirement> ingested,
                              const PipelineResources& res) {
  AnalyzedCorpus a;
  a.parses = merge_parses(corpus, std::move(ingested), res.preprocess);
  std::vector<PosPattern> patterns = res.ngram_patterns;
  if (patterns.empty())
    for (const auto& p : default_ngram_patterns()) patterns.push_back(PosPattern::parse(p));
  for (auto& p : a.parses) {
    bool untagged = std::any_of(p.tokens.begin(), p.tokens.end(), [](const Token& t) { return t.pos.empty(); });
    if (untagged) p = fallback_pos_tag(std::move(p), res.lexicon ? *res.lexicon : PosLexicon{});
    p.ngrams = extract_ngrams(p, patterns);
    p.mentions = recognize_entities(p, res.gazetteer);
    a.chunks.push_back(chunk_noun_phrases(p));
  }
  a.coref = resolve_coreferences(corpus, a.parses, res.synonyms, res.coref);
  return a;
}

}  // namespace relx

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "relx/corpus/pairs.hpp"
#include "relx/nlp/pipeline.hpp"
#include "support.hpp"

using namespace relx;
using relx::test::ertms;
using relx::test::fixture;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no relx::Error thrown";
  return ErrorKind::kUsage;
}

Corpus small_corpus(const std::vector<std::pair<std::string, std::string>>& items, const std::string& doc = "d") {
  Corpus c;
  int order = 0;
  for (const auto& [id, text] : items) c.add({id, text, doc, order++, {}});
  return c;
}

}  // namespace

TEST(Corpus, LoadsFixtureWithDocumentsAndOrder) {
  const Corpus& c = ertms().corpus;
  ASSERT_EQ(c.size(), 190u);
  std::set<std::string> docs;
  for (const auto& r : c) docs.insert(r.doc_id);
  EXPECT_EQ(docs.size(), 5u);
  EXPECT_EQ(c[0].id, "R001");
  EXPECT_EQ(c.at("R190").id, "R190");
}

TEST(Corpus, RejectsDuplicateIdsWithLineNumber) {
  std::string content = R"({"id":"A","text":"x shall y.","doc":"d"}
{"id":"A","text":"z shall w.","doc":"d"}
)";
  try {
    parse_requirements_jsonl(content, "reqs.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDuplicateId);
    EXPECT_NE(std::string(e.what()).find("reqs.jsonl:2"), std::string::npos);
  }
}

TEST(Corpus, RejectsEmptyText) {
  EXPECT_EQ(kind_of([] { parse_requirements_jsonl(R"({"id":"A","text":"   ","doc":"d"})"); }), ErrorKind::kEmptyText);
}

TEST(Corpus, OrderDefaultsToNextInDocument) {
  Corpus c = parse_requirements_jsonl("{\"id\":\"A\",\"text\":\"a.\",\"doc\":\"d\"}\n{\"id\":\"B\",\"text\":\"b.\",\"doc\":\"d\"}\n");
  EXPECT_EQ(c.at("A").order_index, 0);
  EXPECT_EQ(c.at("B").order_index, 1);
}

TEST(Corpus, CsvMappingReadsColumns) {
  std::string csv = "key,body,file\nX1,The DMI shall show data.,spec\nX2,\"The RBC, if any, shall reply.\",spec\n";
  CsvMapping m = CsvMapping::from_json({{"id_col", "key"}, {"text_col", "body"}, {"doc_col", "file"}});
  Corpus c = parse_requirements_csv(csv, m);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.at("X2").text, "The RBC, if any, shall reply.");
}

TEST(Relations, FixtureCountsBinary) {
  RelationSet s = load_relation_set(fixture("ertms/binary.jsonl"), ertms().corpus);
  EXPECT_EQ(s.instances.size(), 10859u);
  EXPECT_EQ(s.count(RelationType::None), 9606u);
  EXPECT_EQ(s.count(RelationType::Related), 1253u);
}

TEST(Relations, FixtureCountsMulticlass) {
  RelationSet s = load_relation_set(fixture("ertms/multiclass.jsonl"), ertms().corpus);
  EXPECT_EQ(s.instances.size(), 4432u);
  EXPECT_EQ(s.count(RelationType::None), 3720u);
  EXPECT_EQ(s.count(RelationType::Requires), 378u);
  EXPECT_EQ(s.count(RelationType::IsSimilar), 334u);
}

TEST(Relations, RefinesIsNormalizedToDetailsWithWarning) {
  Corpus c = small_corpus({{"A", "a."}, {"B", "b."}});
  RelationSet s = parse_relation_set_jsonl(R"({"source":"A","target":"B","type":"refines"})", c);
  ASSERT_EQ(s.instances.size(), 1u);
  EXPECT_EQ(s.instances[0].rtype, RelationType::Details);
  EXPECT_EQ(s.warnings.size(), 1u);
}

TEST(Relations, ValidationErrors) {
  Corpus c = small_corpus({{"A", "a."}, {"B", "b."}});
  EXPECT_EQ(kind_of([&] { parse_relation_set_jsonl(R"({"source":"A","target":"Q","type":"requires"})", c); }),
            ErrorKind::kUnknownId);
  EXPECT_EQ(kind_of([&] { parse_relation_set_jsonl(R"({"source":"A","target":"B","type":"depends"})", c); }),
            ErrorKind::kUnknownLabel);
  EXPECT_EQ(kind_of([&] { parse_relation_set_jsonl(R"({"source":"A","target":"A","type":"requires"})", c); }), ErrorKind::kParse);
  EXPECT_EQ(kind_of([&] {
              parse_relation_set_jsonl("{\"source\":\"A\",\"target\":\"B\",\"type\":\"requires\"}\n"
                                       "{\"source\":\"B\",\"target\":\"A\",\"type\":\"is_similar\"}\n",
                                       c);
            }),
            ErrorKind::kDuplicateId);
}

TEST(Relations, BidirectionalTypesAreCanonicalized) {
  Corpus c = small_corpus({{"A", "a."}, {"B", "b."}});
  auto s = parse_relation_set_jsonl(R"({"source":"B","target":"A","type":"is_similar"})", c);
  EXPECT_EQ(s.instances[0].source_id, "A");
  auto d = parse_relation_set_jsonl(R"({"source":"B","target":"A","type":"requires"})", c);
  EXPECT_EQ(d.instances[0].source_id, "B");
}

TEST(Pairs, UnorderedAndOrderedCounts) {
  const Corpus& c = ertms().corpus;
  auto u = enumerate_candidate_pairs(c, PairMode::kUnordered);
  EXPECT_EQ(u.size(), 17955u);
  std::set<PairKey> distinct(u.begin(), u.end());
  EXPECT_EQ(distinct.size(), u.size());
  for (const auto& p : u) ASSERT_LT(p.source, p.target);
  EXPECT_EQ(enumerate_candidate_pairs(c, PairMode::kOrdered).size(), 190u * 189u);
}

TEST(Pairs, CompleteGoldAddsNoneForUnlabeledPairs) {
  Corpus c = small_corpus({{"A", "a."}, {"B", "b."}, {"C", "c."}});
  RelationSet s = parse_relation_set_jsonl(R"({"source":"A","target":"B","type":"requires"})", c);
  EXPECT_EQ(labeled_pairs(s, c).size(), 1u);
  s.complete = true;
  auto all = labeled_pairs(s, c);
  ASSERT_EQ(all.size(), 3u);
  int none = 0;
  for (const auto& p : all) none += p.label == RelationType::None;
  EXPECT_EQ(none, 2);
}

TEST(Pairs, KfoldPropertiesOverSeeds) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    int n = std::uniform_int_distribution<int>(12, 200)(rng);
    int k = std::uniform_int_distribution<int>(2, 10)(rng);
    std::vector<LabeledPair> pairs;
    std::map<RelationType, int> per_class;
    for (int i = 0; i < n; ++i) {
      RelationType t = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? RelationType::Requires : RelationType::None;
      pairs.push_back({canonical_pair("a" + std::to_string(i), "b" + std::to_string(i)), t});
      ++per_class[t];
    }
    auto fa = kfold_split(pairs, k, true, static_cast<std::uint64_t>(trial));
    auto folds = fa.folds(pairs);
    std::size_t lo = pairs.size(), hi = 0, total = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      total += f.size();
      std::map<RelationType, int> c;
      for (auto i : f) ++c[pairs[i].label];
      for (const auto& [t, cnt] : per_class) {
        double ideal = static_cast<double>(cnt) / k;
        EXPECT_LE(std::abs(c[t] - ideal), 1.0);
      }
    }
    EXPECT_LE(hi - lo, 1u);
    EXPECT_EQ(total, pairs.size());
    EXPECT_EQ(kfold_split(pairs, k, true, static_cast<std::uint64_t>(trial)).assignments, fa.assignments);
  }
}

TEST(Pairs, InfeasibleSplits) {
  std::vector<LabeledPair> pairs = {{{"a", "b"}, RelationType::None}, {{"a", "c"}, RelationType::None}};
  EXPECT_EQ(kind_of([&] { kfold_split(pairs, 1, false, 1); }), ErrorKind::kInfeasibleSplit);
  EXPECT_EQ(kind_of([&] { kfold_split(pairs, 3, false, 1); }), ErrorKind::kInfeasibleSplit);
}

TEST(Preprocess, FlagsStopwordsWithoutRemovingThem) {
  Requirement r{"A", "The  DMI shall display the speed. It shall flash!", "d", 0, {}};
  ParsedRequirement p = preprocess(r);
  ASSERT_EQ(p.tokens.size(), 11u);
  EXPECT_TRUE(p.tokens[0].is_stopword);
  EXPECT_FALSE(p.tokens[1].is_stopword);
  ASSERT_EQ(p.sentences.size(), 2u);
  EXPECT_EQ(p.sentences[0], (Span{0, 7}));
}

TEST(Preprocess, HyphenatedWordsStayWhole) {
  auto p = preprocess(Requirement{"A", "The ETCS on-board (EVC) shall reply.", "d", 0, {}});
  std::vector<std::string> surf;
  for (const auto& t : p.tokens) surf.push_back(t.surface);
  EXPECT_EQ(surf, (std::vector<std::string>{"The", "ETCS", "on-board", "(", "EVC", ")", "shall", "reply", "."}));
}

TEST(Conllu, FixtureParsesCoverEveryRequirement) {
  const auto& a = ertms().analyzed;
  ASSERT_EQ(a.parses.size(), 190u);
  for (const auto& p : a.parses) {
    ASSERT_TRUE(p.has_arcs()) << p.requirement_id;
    int roots = 0;
    for (const auto& arc : p.arcs) roots += arc.is_root();
    EXPECT_EQ(roots, static_cast<int>(p.sentences.size()));
  }
}

TEST(Conllu, RoundTrip) {
  const auto& l = ertms();
  std::vector<const ParsedRequirement*> ptrs;
  for (const auto& p : l.analyzed.parses) ptrs.push_back(&p);
  std::string text = to_conllu(ptrs);
  auto again = parse_conllu(text, l.corpus);
  for (const auto& p : l.analyzed.parses) {
    const auto& q = again.at(p.requirement_id);
    ASSERT_EQ(q.tokens.size(), p.tokens.size());
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
      EXPECT_EQ(q.tokens[i].surface, p.tokens[i].surface);
      EXPECT_EQ(q.tokens[i].pos, p.tokens[i].pos);
      EXPECT_EQ(q.arcs[i].head_index, p.arcs[i].head_index);
      EXPECT_EQ(q.arcs[i].dep_label, p.arcs[i].dep_label);
    }
  }
}

TEST(Conllu, MalformedTreesAndUnknownIds) {
  Corpus c = small_corpus({{"A", "x y."}});
  std::string cycle = "# sent_id = A/0\n1\tx\tx\tNOUN\t_\t_\t2\tnsubj\t_\t_\n2\ty\ty\tVERB\t_\t_\t1\tobj\t_\t_\n\n";
  EXPECT_EQ(kind_of([&] { parse_conllu(cycle, c); }), ErrorKind::kMalformedTree);
  std::string two_roots = "# sent_id = A/0\n1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n2\ty\ty\tVERB\t_\t_\t0\troot\t_\t_\n\n";
  EXPECT_EQ(kind_of([&] { parse_conllu(two_roots, c); }), ErrorKind::kMalformedTree);
  std::string unknown = "# sent_id = Z/0\n1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n\n";
  EXPECT_EQ(kind_of([&] { parse_conllu(unknown, c); }), ErrorKind::kUnmatchedDocument);
  std::string short_row = "# sent_id = A/0\n1\tx\tx\tNOUN\n\n";
  EXPECT_EQ(kind_of([&] { parse_conllu(short_row, c); }), ErrorKind::kParse);
}

TEST(Pos, LexiconMajorityThenSuffixRules) {
  PosLexicon lex;
  lex.add("record", "NOUN", 3);
  lex.add("record", "VERB", 5);
  ParsedRequirement p = preprocess(Requirement{"A", "record quickly the activation", "d", 0, {}});
  p = fallback_pos_tag(p, lex);
  EXPECT_EQ(p.tokens[0].pos, "VERB");
  EXPECT_EQ(p.tokens[1].pos, "ADV");
  EXPECT_EQ(p.tokens[3].pos, "NOUN");
  EXPECT_EQ(suffix_rule_tag("RBC"), "PROPN");
  EXPECT_EQ(suffix_rule_tag("30"), "NUM");
  EXPECT_EQ(suffix_rule_tag(","), "PUNCT");
}

TEST(Ner, LongestMatchWins) {
  Gazetteer g = Gazetteer::parse("ETCS\tSystem\tETCS\nETCS on-board\tComponent\tETCS on-board\n");
  auto p = preprocess(Requirement{"A", "The ETCS on-board and ETCS shall agree.", "d", 0, {}});
  auto m = recognize_entities(p, g);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].canonical, "ETCS on-board");
  EXPECT_EQ(m[0].span, (Span{1, 3}));
  EXPECT_EQ(m[1].canonical, "ETCS");
}

TEST(Ngrams, PatternsAndDependencyConstraints) {
  EXPECT_EQ(kind_of([] { PosPattern::parse("NOUN-FOO"); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { PosPattern::parse("compound-NOUN"); }), ErrorKind::kConfig);
  const auto& a = ertms().analyzed;
  const auto& p = a.parses[a.index_of("R001")];  // "... the communication session ..."
  auto grams = extract_ngrams(p, std::vector<std::string>{"NOUN-compound-NOUN"});
  ASSERT_EQ(grams.size(), 1u);
  EXPECT_EQ(grams[0].label, "communication session");
  EXPECT_EQ(grams[0].root_index, 6);
}

TEST(Coref, LocationPredecessorAndSynonyms) {
  Corpus c = small_corpus({{"A", "The RBC shall record the position."}, {"B", "The function shall log the speed."}});
  Gazetteer g = Gazetteer::parse("RBC\tComponent\tRBC\n");
  std::vector<ParsedRequirement> parses;
  for (const auto& r : c) {
    auto p = preprocess(r);
    p.mentions = recognize_entities(p, g);
    parses.push_back(p);
  }
  SynonymTable syn = SynonymTable::parse("record\tlog\n");
  auto links = resolve_coreferences(c, parses, syn);
  bool loc = false, synonym = false;
  for (const auto& l : links) {
    if (l.rule == CorefRule::kLocationPredecessor) {
      loc = true;
      EXPECT_EQ(l.from.requirement_id, "B");
      EXPECT_EQ(l.to.requirement_id, "A");
      EXPECT_EQ(l.to.span, (Span{1, 2}));
    }
    if (l.rule == CorefRule::kSynonymTable) synonym = l.from.requirement_id == "B" && l.to.requirement_id == "A";
  }
  EXPECT_TRUE(loc);
  EXPECT_TRUE(synonym);
}

TEST(Pipeline, ResourcesBuildAndAnnotateEntities) {
  const auto& a = ertms().analyzed;
  std::size_t with_mentions = 0;
  for (const auto& p : a.parses) with_mentions += !p.mentions.empty();
  EXPECT_GT(with_mentions, 150u);
  EXPECT_EQ(a.chunks.size(), a.parses.size());
  EXPECT_FALSE(a.coref.empty());
}

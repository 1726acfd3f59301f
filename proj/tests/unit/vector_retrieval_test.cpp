#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "relx/eval/metrics.hpp"
#include "relx/retrieval/crossref.hpp"
#include "relx/retrieval/ontology.hpp"
#include "relx/retrieval/patterns.hpp"
#include "relx/retrieval/semantic_graph.hpp"
#include "relx/retrieval/similarity_relate.hpp"
#include "relx/retrieval/syntactic_graph.hpp"
#include "relx/service/workflows.hpp"
#include "relx/vector/embeddings.hpp"
#include "relx/vector/lsa.hpp"
#include "relx/vector/tfidf.hpp"
#include "support.hpp"

using namespace relx;
using relx::test::data_dir;
using relx::test::ertms;
using relx::test::samples;
using relx::test::fixture;

namespace {

std::vector<ParsedRequirement> docs_of(const std::vector<std::string>& texts) {
  std::vector<ParsedRequirement> out;
  for (std::size_t i = 0; i < texts.size(); ++i)
    out.push_back(preprocess(Requirement{"D" + std::to_string(i), texts[i], "d", static_cast<int>(i), {}}));
  return out;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

oracle::Dense to_dense(const Eigen::MatrixXd& m) {
  oracle::Dense d(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return d;
}

const RelationPrediction* find(const std::vector<RelationPrediction>& preds, const std::string& s, const std::string& t) {
  for (const auto& p : preds)
    if (p.source_id == s && p.target_id == t) return &p;
  return nullptr;
}

}  // namespace

TEST(Tfidf, WeightIsTfTimesLog2Idf) {
  auto docs = docs_of({"brake brake brake train", "brake train", "door train", "light train"});
  auto m = tfidf_fit(docs);
  auto v = tfidf_vectorize(m, docs[0]);
  EXPECT_NEAR(v.get(m.vocabulary.at("brake")), 3.0, 1e-12);
  EXPECT_EQ(v.get(m.vocabulary.at("train")), 0.0);
  EXPECT_NEAR(m.idf("door"), 2.0, 1e-12);
}

TEST(Tfidf, CosineMatchesOracle) {
  std::vector<std::string> texts = {"The DMI shall display the speed and the speed limit.", "The DMI shall display the target distance.",
                                    "The RBC shall send the movement authority.", "The RBC shall display nothing to the driver.",
                                    "The speed limit shall be supervised."};
  auto docs = docs_of(texts);
  auto m = tfidf_fit(docs);
  auto preds = tfidf_relate(m, docs, 0.0001);
  std::vector<std::vector<std::string>> terms;
  for (const auto& d : docs) terms.push_back(m.filter.terms(d));
  int checked = 0;
  for (std::size_t i = 0; i < docs.size(); ++i)
    for (std::size_t j = i + 1; j < docs.size(); ++j) {
      double want = oracle::tfidf_cosine(terms, i, j);
      const auto* p = find(preds, docs[i].requirement_id, docs[j].requirement_id);
      if (want <= 0) {
        EXPECT_EQ(p, nullptr);
        continue;
      }
      ASSERT_NE(p, nullptr) << i << "," << j;
      EXPECT_NEAR(p->confidence, want, 1e-12);
      ++checked;
    }
  EXPECT_GT(checked, 2);
}

TEST(Tfidf, ThresholdValidationAndEmptyCorpus) {
  auto docs = docs_of({"a b", "b c"});
  auto m = tfidf_fit(docs);
  EXPECT_THROW(tfidf_relate(m, docs, 1.5), Error);
  EXPECT_THROW(tfidf_fit({}), Error);
}

TEST(Tfidf, AllNoneBaselineAccuracy) {
  const auto& l = ertms();
  RelationSet gold = load_relation_set(fixture("ertms/binary.jsonl"), l.corpus);
  auto report = evaluate_predictions(l.corpus, gold, {});
  EXPECT_NEAR(report.accuracy, 9606.0 / 10859.0, 1e-9);
  EXPECT_EQ(report.per_class.at(RelationType::Related).recall, 0.0);
}

TEST(Lsa, SingularValuesMatchJacobiOracle) {
  Eigen::MatrixXd a = random_matrix(50, 30, 1234);
  auto want = oracle::singular_values(to_dense(a));
  LsaModel m = lsa_fit(a, 5);
  ASSERT_EQ(m.singular_values.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(m.singular_values[static_cast<std::size_t>(i)], want[static_cast<std::size_t>(i)], 1e-6);
  Eigen::MatrixXd gram = m.term_basis.transpose() * m.term_basis;
  EXPECT_TRUE(gram.isIdentity(1e-9));
}

TEST(Lsa, RankOneMatrixHasOneSignificantValue) {
  Eigen::VectorXd u = random_matrix(20, 1, 5).col(0), v = random_matrix(12, 1, 6).col(0);
  Eigen::MatrixXd a = u * v.transpose();
  LsaModel m = lsa_fit(a, 2);
  EXPECT_NEAR(m.singular_values[0], u.norm() * v.norm(), 1e-9);
  EXPECT_LE(m.singular_values[1], 1e-9);
}

TEST(Lsa, KOutOfRangeAndDeterminism) {
  Eigen::MatrixXd a = random_matrix(8, 6, 3);
  EXPECT_THROW(lsa_fit(a, 0), Error);
  EXPECT_THROW(lsa_fit(a, 7), Error);
  auto m1 = lsa_fit(a, 3), m2 = lsa_fit(a, 3);
  EXPECT_EQ(m1.singular_values, m2.singular_values);
  EXPECT_TRUE(m1.term_basis.isApprox(m2.term_basis));
}

TEST(Lsa, ProjectionOfDocumentRowsRecoversUSigma) {
  Eigen::MatrixXd a = random_matrix(10, 7, 11);
  LsaModel m = lsa_fit(a, 7);
  for (int r = 0; r < 10; ++r) {
    std::vector<double> row(7);
    for (int c = 0; c < 7; ++c) row[static_cast<std::size_t>(c)] = a(r, c);
    auto z = lsa_project(m, row);
    Eigen::VectorXd back = m.term_basis * Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
    for (int c = 0; c < 7; ++c) EXPECT_NEAR(back(c), a(r, c), 1e-8);
  }
}

TEST(Similarity, MeasuresAndDimensionCheck) {
  std::vector<double> u = {1, 0, 2}, v = {0, 1, 2};
  EXPECT_NEAR(similarity(u, v, SimilarityMeasure::kCosine), 4.0 / 5.0, 1e-12);
  EXPECT_NEAR(similarity(u, v, SimilarityMeasure::kEuclidean), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(similarity(u, v, SimilarityMeasure::kManhattan), 2.0, 1e-12);
  EXPECT_NEAR(similarity_score(u, v, SimilarityMeasure::kManhattan), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(similarity({0, 0}, {1, 1}, SimilarityMeasure::kCosine), 0.0);
  try {
    similarity({1, 2}, {1, 2, 3}, SimilarityMeasure::kCosine);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(Embeddings, ParsingAndMeanVectors) {
  EXPECT_THROW(parse_embeddings("a 1 2\nb 1 2 3\n"), Error);
  EXPECT_THROW(parse_embeddings("a 1 x\n"), Error);
  auto t = parse_embeddings("brake 1 0\ntrain 0 1\n");
  auto docs = docs_of({"brake train", "unknown words"});
  auto e = embed_requirement(t, docs[0]);
  EXPECT_NEAR(e.vector[0], 0.5, 1e-12);
  EXPECT_NEAR(e.vector[1], 0.5, 1e-12);
  EXPECT_TRUE(embed_requirement(t, docs[1]).all_oov);
  auto table = load_embeddings(data_dir() / "embeddings/ertms-16d.txt");
  EXPECT_EQ(table.dimension, 16);
  EXPECT_GT(similarity(*table.find("log"), *table.find("record"), SimilarityMeasure::kCosine), 0.8);
}

TEST(Crossref, IdReferencesPointFromTheReferringRequirement) {
  const auto& l = ertms();
  auto preds = detect_cross_references(l.corpus, l.analyzed);
  const auto* p = find(preds, "R012", "R011");
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->rtype, RelationType::Requires);
  EXPECT_FALSE(p->evidence.at("id_refs").empty());
  for (const auto& q : preds) {
    EXPECT_GT(q.confidence, 0.0);
    EXPECT_LE(q.confidence, 1.0);
  }
  EXPECT_EQ(predictions_to_jsonl(preds), predictions_to_jsonl(detect_cross_references(l.corpus, l.analyzed)));
}

TEST(Patterns, RootSubjectRuleOrientsRequiresBySubjectRole) {
  const auto& l = samples();
  auto rules = load_pattern_rules(data_dir() / "rules/default.json");
  auto preds = match_patterns(l.analyzed, rules);
  bool requires_found = false;
  for (const auto& p : preds)
    if (p.pair() == canonical_pair("S1A", "S1B") && p.rtype == RelationType::Requires) {
      requires_found = true;
      EXPECT_EQ(p.source_id, "S1A");
      EXPECT_NE(p.evidence.dump().find("DMI"), std::string::npos);
    }
  EXPECT_TRUE(requires_found);
}

TEST(Patterns, RuleValidation) {
  EXPECT_THROW(parse_pattern_rules(R"([{"id":"x"}])"), Error);
  EXPECT_THROW(parse_pattern_rules(R"([{"id":"x","dep_patterns":[["VERBZ","nsubj","*"]]}])"), Error);
  EXPECT_THROW(parse_pattern_rules(R"([{"id":"x","keywords":["a"]},{"id":"x","keywords":["b"]}])"), Error);
  EXPECT_THROW(parse_pattern_rules(R"([{"id":"x","keywords":["a"],"direction_hint":"sideways"}])"), Error);
}

TEST(SyntacticGraph, WeightsAndIncrementalMatches) {
  const auto& a = ertms().analyzed;
  SyntacticGraph g = build_syntactic_graph(a.parses);
  for (const auto& [e, c] : g.edges()) ASSERT_NEAR(g.weight(e), std::log2(1.0 + c), 1e-12);
  auto rules = parse_pattern_rules(R"([{"id":"store","keywords":["record","store"],"rtype":"is_similar"}])");
  auto preds = syngraph_relate(a.parses, rules);
  EXPECT_FALSE(preds.empty());
  for (const auto& p : preds) {
    EXPECT_EQ(p.method, "syngraph");
    EXPECT_EQ(p.rtype, RelationType::IsSimilar);
  }
}

TEST(SemanticGraph, AgentPredicateObjectNodesAreShared) {
  const auto& l = samples();
  SemanticGraph g = build_semantic_graph(l.analyzed);
  auto pred = g.find("pred:receive");
  ASSERT_TRUE(pred.has_value());
  EXPECT_TRUE(g.occurrences(*pred).count("S2A"));
  EXPECT_TRUE(g.occurrences(*pred).count("S2B"));
  std::map<std::string, std::string> role_of;
  for (const auto& e : g.edges())
    if (e.predicate == *pred) role_of[g.nodes()[static_cast<std::size_t>(e.argument)].label] = e.role;
  bool agent = false, object = false;
  for (const auto& [label, role] : role_of) {
    std::string low = to_lower(label);
    if (low.find("on-board") != std::string::npos && role == "agent") agent = true;
    if (low.find("trackside") != std::string::npos && role == "object") object = true;
  }
  EXPECT_TRUE(agent);
  EXPECT_TRUE(object);
  auto preds = activation_relate(g, l.analyzed.parses, {});
  EXPECT_NE(find(preds, "S2A", "S2B"), nullptr);
}

TEST(SemanticGraph, SpreadingActivationMatchesHandComputation) {
  SemanticGraph g;
  int p = g.add_node(SemanticNodeKind::kPredicate, "pred:x", "x");
  int a = g.add_node(SemanticNodeKind::kArgument, "arg:a", "a");
  int b = g.add_node(SemanticNodeKind::kArgument, "arg:b", "b");
  int q = g.add_node(SemanticNodeKind::kPredicate, "pred:y", "y");
  g.add_edge(p, "agent", a);
  g.add_edge(p, "object", b);
  g.add_edge(q, "agent", b);
  EXPECT_THROW(g.add_edge(a, "agent", b), Error);
  ActivationParams params;
  params.decay = 0.5;
  params.hops = 2;
  params.floor = 0;
  auto r = spread_activation(g, {a}, params);
  // hop 1: a -> p gets 0.5. hop 2: p (degree 2) passes 0.125 to a and b.
  EXPECT_NEAR(r.activation[static_cast<std::size_t>(a)], 1.125, 1e-12);
  EXPECT_NEAR(r.activation[static_cast<std::size_t>(p)], 0.5, 1e-12);
  EXPECT_NEAR(r.activation[static_cast<std::size_t>(b)], 0.125, 1e-12);
  EXPECT_NEAR(r.activation[static_cast<std::size_t>(q)], 0.0, 1e-12);
  ASSERT_EQ(r.hop_increments.size(), 2u);
  EXPECT_GE(r.hop_increments[0], r.hop_increments[1]);
}

TEST(Ontology, MiniOntologyShape) {
  Ontology o = load_ontology(data_dir() / "ontology/etcs-mini.json");
  EXPECT_EQ(o.concepts.size(), 25u);
  std::map<RelationType, int> c;
  for (const auto& r : o.relations) ++c[r.rtype];
  EXPECT_EQ(c[RelationType::Requires], 7);
  EXPECT_EQ(c[RelationType::Details], 17);
  EXPECT_EQ(c[RelationType::Conflicts], 1);
  EXPECT_EQ(c.size(), 3u);
}

TEST(Ontology, LevelTwoRefinesReceivedInformation) {
  const auto& l = samples();
  Ontology o = load_ontology(data_dir() / "ontology/etcs-mini.json");
  auto preds = ontology_match(o, l.analyzed.parses);
  const auto* p = find(preds, "S3A", "S3B");
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->rtype, RelationType::Details);
  EXPECT_EQ(find(preds, "S3B", "S3A"), nullptr);
  EXPECT_NE(p->evidence.dump().find("ETCSLevel2"), std::string::npos);
}

TEST(Ontology, EmitsOnlyRequiresDetailsConflicts) {
  const auto& l = ertms();
  Ontology o = load_ontology(data_dir() / "ontology/etcs-mini.json");
  auto preds = ontology_match(o, l.analyzed.parses);
  EXPECT_FALSE(preds.empty());
  for (const auto& p : preds)
    EXPECT_TRUE(p.rtype == RelationType::Requires || p.rtype == RelationType::Details || p.rtype == RelationType::Conflicts);
}

TEST(Ontology, ValidationErrors) {
  auto bad_parent = nlohmann::json::parse(R"({"concepts":[{"id":"A","parent":"Z"}]})");
  EXPECT_THROW(ontology_from_json(bad_parent), Error);
  auto cycle = nlohmann::json::parse(R"({"concepts":[{"id":"A","parent":"B"},{"id":"B","parent":"A"}]})");
  EXPECT_THROW(ontology_from_json(cycle), Error);
  auto bad_rel = nlohmann::json::parse(R"({"concepts":[{"id":"A"}],"relations":[{"source":"A","target":"Q","type":"requires"}]})");
  EXPECT_THROW(ontology_from_json(bad_rel), Error);
  EXPECT_EQ(split_identifier("ETCSLevel2"), (std::vector<std::string>{"etcs", "level", "2"}));
}

TEST(Methods, UnknownMethodAndParams) {
  const auto& l = samples();
  try {
    run_method(l.corpus, l.analyzed, "magic", nlohmann::json::object(), relx::test::resources());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
  try {
    run_method(l.corpus, l.analyzed, "tfidf", {{"treshold", 0.3}}, relx::test::resources());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  for (const auto& m : extraction_methods())
    EXPECT_NO_THROW(run_method(l.corpus, l.analyzed, m, {{"seed", 1}}, relx::test::resources())) << m;
}

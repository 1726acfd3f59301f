#pragma once

#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "relx/nlp/pipeline.hpp"
#include "relx/retrieval/prediction.hpp"

namespace relx {

enum class SemanticNodeKind { kPredicate, kArgument };

struct SemanticNode {
  SemanticNodeKind kind;
  std::string key;    // "pred:<lemma>" or "arg:<canonical label>"
  std::string label;  // display text from the first occurrence
};

struct SemanticEdge {
  int predicate;
  std::string role;  // "agent" | "object"
  int argument;
  auto operator<=>(const SemanticEdge&) const = default;
};

class SemanticGraph {
 public:
  int add_node(SemanticNodeKind kind, const std::string& key, const std::string& label) {
    auto [it, fresh] = index_.emplace(key, static_cast<int>(nodes_.size()));
    if (fresh) {
      nodes_.push_back({kind, key, label});
      occurrences_.emplace_back();
      adjacency_.emplace_back();
    }
    return it->second;
  }

  void add_edge(int predicate, const std::string& role, int argument) {
    if (nodes_[static_cast<std::size_t>(predicate)].kind != SemanticNodeKind::kPredicate ||
        nodes_[static_cast<std::size_t>(argument)].kind != SemanticNodeKind::kArgument)
      throw Error(ErrorKind::kState, "semantic edges must join a predicate to an argument");
    if (edges_.insert({predicate, role, argument}).second) {
      adjacency_[static_cast<std::size_t>(predicate)].insert(argument);
      adjacency_[static_cast<std::size_t>(argument)].insert(predicate);
    }
  }

  void add_occurrence(int node, const std::string& requirement_id) { occurrences_[static_cast<std::size_t>(node)].insert(requirement_id); }

  std::optional<int> find(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<SemanticNode>& nodes() const { return nodes_; }
  const std::set<SemanticEdge>& edges() const { return edges_; }
  const std::set<int>& neighbors(int node) const { return adjacency_[static_cast<std::size_t>(node)]; }
  const std::set<std::string>& occurrences(int node) const { return occurrences_[static_cast<std::size_t>(node)]; }

  std::vector<int> nodes_of(const std::string& requirement_id) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (occurrences_[i].count(requirement_id)) out.push_back(static_cast<int>(i));
    return out;
  }

 private:
  std::vector<SemanticNode> nodes_;
  std::map<std::string, int> index_;
  std::set<SemanticEdge> edges_;
  std::vector<std::set<int>> adjacency_;
  std::vector<std::set<std::string>> occurrences_;
};

namespace detail {

inline bool is_agent_dep(const std::string& d) { return d == "nsubj" || d == "nsubj:pass" || d == "csubj"; }
inline bool is_object_dep(const std::string& d) { return d == "obj" || d == "iobj" || d == "obl" || d.rfind("obl:", 0) == 0; }

struct ArgumentRef {
  std::string key;  // before coref merging
  std::string label;
};

// Argument identity of the token at `t`: the covering entity mention's
// canonical name, else the covering noun chunk, else the nominal token itself.
inline std::optional<ArgumentRef> argument_at(const ParsedRequirement& p, const std::vector<NGram>& chunks, int t) {
  const NGram* chunk = nullptr;
  for (const auto& c : chunks)
    if (c.span.contains(t)) chunk = &c;
  Span span = chunk ? chunk->span : Span{t, t + 1};
  for (const auto& m : p.mentions)
    if (m.span.overlaps(span)) return ArgumentRef{"arg:" + to_lower(m.canonical), m.canonical};
  if (chunk) return ArgumentRef{"arg:" + to_lower(p.text_of(chunk->span)), p.text_of(chunk->span)};
  const std::string& pos = p.tokens[static_cast<std::size_t>(t)].pos;
  if (pos == "NOUN" || pos == "PROPN" || pos == "PRON" || pos == "NUM")
    return ArgumentRef{"arg:" + p.tokens[static_cast<std::size_t>(t)].lemma, p.tokens[static_cast<std::size_t>(t)].surface};
  return std::nullopt;
}

struct Frame {
  std::string predicate;  // lemma
  std::vector<std::pair<std::string, ArgumentRef>> args;  // role, argument
};

// SRL-lite frames: verbs with subject or object dependents. A verb without
// its own subject inherits the subject of its governing head.
inline std::vector<Frame> frames_of(const ParsedRequirement& p, const std::vector<NGram>& chunks) {
  std::vector<Frame> frames;
  if (!p.has_arcs()) return frames;
  std::vector<std::vector<const DependencyArc*>> deps(p.tokens.size());
  for (const auto& a : p.arcs)
    if (!a.is_root()) deps[static_cast<std::size_t>(a.head_index)].push_back(&a);
  auto subject_of = [&](int v) -> int {
    for (const auto* a : deps[static_cast<std::size_t>(v)])
      if (is_agent_dep(a->dep_label)) return a->child_index;
    return -1;
  };
  for (const auto& tok : p.tokens) {
    if (tok.pos != "VERB") continue;
    Frame f{tok.lemma, {}};
    int subj = subject_of(tok.index);
    for (int cur = tok.index, guard = 0; subj < 0 && guard < static_cast<int>(p.tokens.size()); ++guard) {
      const DependencyArc* up = p.arc_of(cur);
      if (!up || up->is_root()) break;
      cur = up->head_index;
      subj = subject_of(cur);
    }
    if (subj >= 0)
      if (auto arg = argument_at(p, chunks, subj)) f.args.push_back({"agent", *arg});
    for (const auto* a : deps[static_cast<std::size_t>(tok.index)])
      if (is_object_dep(a->dep_label))
        if (auto arg = argument_at(p, chunks, a->child_index)) f.args.push_back({"object", *arg});
    if (!f.args.empty()) frames.push_back(std::move(f));
  }
  return frames;
}

class KeyUnion {
 public:
  std::string find(const std::string& k) {
    auto it = parent_.find(k);
    if (it == parent_.end() || it->second == k) return k;
    std::string root = find(it->second);
    parent_[k] = root;
    return root;
  }
  // The lexicographically smaller root represents the merged set.
  void unite(const std::string& a, const std::string& b) {
    std::string ra = find(a), rb = find(b);
    if (ra == rb) return;
    if (rb < ra) std::swap(ra, rb);
    parent_[rb] = ra;
    parent_.emplace(ra, ra);
  }

 private:
  std::map<std::string, std::string> parent_;
};

}  // namespace detail

inline SemanticGraph build_semantic_graph(const AnalyzedCorpus& a) {
  std::vector<std::vector<detail::Frame>> frames;
  for (std::size_t i = 0; i < a.parses.size(); ++i) frames.push_back(detail::frames_of(a.parses[i], a.chunks[i]));

  detail::KeyUnion uf;
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < a.parses.size(); ++i) pos[a.parses[i].requirement_id] = i;
  auto key_of = [&](const MentionRef& m) -> std::optional<std::string> {
    auto it = pos.find(m.requirement_id);
    if (it == pos.end() || m.span.size() <= 0) return std::nullopt;
    auto arg = detail::argument_at(a.parses[it->second], a.chunks[it->second], m.span.end - 1);
    return arg ? std::optional<std::string>(arg->key) : std::nullopt;
  };
  for (const auto& l : a.coref) {
    auto kf = key_of(l.from), kt = key_of(l.to);
    if (kf && kt) uf.unite(*kf, *kt);
  }

  SemanticGraph g;
  for (std::size_t i = 0; i < a.parses.size(); ++i) {
    const std::string& id = a.parses[i].requirement_id;
    for (const auto& f : frames[i]) {
      int pred = g.add_node(SemanticNodeKind::kPredicate, "pred:" + f.predicate, f.predicate);
      g.add_occurrence(pred, id);
      for (const auto& [role, arg] : f.args) {
        int node = g.add_node(SemanticNodeKind::kArgument, uf.find(arg.key), arg.label);
        g.add_occurrence(node, id);
        g.add_edge(pred, role, node);
      }
    }
  }
  return g;
}

struct ActivationParams {
  double decay = 0.5;
  int hops = 3;
  double floor = 1e-4;
};

struct ActivationResult {
  std::vector<double> activation;      // per node
  std::vector<double> hop_increments;  // total activation added at each hop
};

// Seeds start at 1.0. Each hop spreads the previous hop's increments:
// a(v) += delta(u) * decay / degree(u) for every neighbor v of u.
inline ActivationResult spread_activation(const SemanticGraph& g, const std::vector<int>& seeds, const ActivationParams& params = {}) {
  if (!(params.decay > 0.0 && params.decay <= 1.0)) throw Error(ErrorKind::kConfig, "activation decay must lie in (0, 1]");
  if (params.hops < 0) throw Error(ErrorKind::kConfig, "activation hops must be >= 0");
  const std::size_t n = g.nodes().size();
  ActivationResult r;
  r.activation.assign(n, 0.0);
  std::vector<double> delta(n, 0.0);
  for (int s : seeds) {
    if (s < 0 || static_cast<std::size_t>(s) >= n) throw Error(ErrorKind::kNotFound, "seed node outside graph");
    delta[static_cast<std::size_t>(s)] = 1.0;
    r.activation[static_cast<std::size_t>(s)] = 1.0;
  }
  for (int hop = 0; hop < params.hops; ++hop) {
    std::vector<double> next(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      if (delta[u] == 0.0) continue;
      const auto& nb = g.neighbors(static_cast<int>(u));
      if (nb.empty()) continue;
      double share = delta[u] * params.decay / static_cast<double>(nb.size());
      for (int v : nb) next[static_cast<std::size_t>(v)] += share;
    }
    double total = std::accumulate(next.begin(), next.end(), 0.0);
    r.hop_increments.push_back(total);
    for (std::size_t v = 0; v < n; ++v) r.activation[v] += next[v];
    delta.swap(next);
    if (std::all_of(delta.begin(), delta.end(), [&](double d) { return d < params.floor; })) break;
  }
  return r;
}

struct ActivationRelateConfig {
  ActivationParams params;
  double threshold = 0.5;
  RelationType rtype = RelationType::IsSimilar;
};

// score(i -> j) = mean over j's nodes of min(1, activation) when seeding
// from i's nodes; a pair scores the larger of both directions.
inline std::vector<RelationPrediction> activation_relate(const SemanticGraph& g, const std::vector<ParsedRequirement>& parses,
                                                         const ActivationRelateConfig& config = {}) {
  const std::size_t n = parses.size();
  std::vector<std::vector<int>> own(n);
  for (std::size_t i = 0; i < n; ++i) own[i] = g.nodes_of(parses[i].requirement_id);
  std::vector<std::vector<double>> score(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (own[i].empty()) continue;
    auto act = spread_activation(g, own[i], config.params).activation;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || own[j].empty()) continue;
      double s = 0;
      for (int v : own[j]) s += std::min(1.0, act[static_cast<std::size_t>(v)]);
      score[i][j] = s / static_cast<double>(own[j].size());
    }
  }
  std::vector<RelationPrediction> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = std::max(score[i][j], score[j][i]);
      if (s <= 0.0 || s < config.threshold) continue;
      out.push_back(make_prediction(parses[i].requirement_id, parses[j].requirement_id, config.rtype, s, "semgraph",
                                    {{"activation", s}}));
    }
  sort_predictions(out);
  return out;
}

}  // namespace relx

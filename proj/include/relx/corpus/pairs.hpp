#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "relx/corpus/corpus.hpp"
#include "relx/corpus/relations.hpp"
#include "relx/corpus/types.hpp"

namespace relx {

enum class PairMode { kOrdered, kUnordered };

// Deterministic in corpus order. Unordered keys are canonical (source < target).
inline std::vector<PairKey> enumerate_candidate_pairs(const Corpus& corpus, PairMode mode) {
  const std::size_t n = corpus.size();
  if (n < 2) throw Error(ErrorKind::kEmptyCorpus, "need at least 2 requirements to form pairs, got " + std::to_string(n));
  std::vector<PairKey> pairs;
  if (mode == PairMode::kOrdered) {
    pairs.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) pairs.push_back({corpus[i].id, corpus[j].id});
  } else {
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pairs.push_back(canonical_pair(corpus[i].id, corpus[j].id));
  }
  return pairs;
}

struct LabeledPair {
  PairKey pair;
  RelationType label = RelationType::None;
};

// Gold labels as a training/evaluation list. With a complete set, every
// unordered candidate pair without a label is added as None.
inline std::vector<LabeledPair> labeled_pairs(const RelationSet& gold, const Corpus& corpus) {
  std::map<PairKey, RelationType> m = gold.as_map();
  if (gold.complete)
    for (auto& p : enumerate_candidate_pairs(corpus, PairMode::kUnordered)) m.emplace(p, RelationType::None);
  std::vector<LabeledPair> out;
  out.reserve(m.size());
  for (auto& [k, v] : m) out.push_back({k, v});
  return out;
}

struct FoldAssignment {
  int fold_count = 0;
  std::map<PairKey, int> assignments;
  bool stratified = false;

  // Indexes into the original pair list, per fold.
  std::vector<std::vector<std::size_t>> folds(const std::vector<LabeledPair>& pairs) const {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(fold_count));
    for (std::size_t i = 0; i < pairs.size(); ++i) out[static_cast<std::size_t>(assignments.at(pairs[i].pair))].push_back(i);
    return out;
  }
};

// Shuffles with a seeded Mersenne twister and deals pairs round-robin. In
// stratified mode each class is dealt in turn, continuing the round-robin
// cursor, so per-fold class counts differ from the ideal by at most one and
// fold sizes differ by at most one.
inline FoldAssignment kfold_split(const std::vector<LabeledPair>& pairs, int k, bool stratified, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::kInfeasibleSplit, "k must be >= 2, got " + std::to_string(k));
  if (pairs.size() < static_cast<std::size_t>(k))
    throw Error(ErrorKind::kInfeasibleSplit,
                "cannot split " + std::to_string(pairs.size()) + " pairs into " + std::to_string(k) + " folds");
  FoldAssignment fa;
  fa.fold_count = k;
  fa.stratified = stratified;
  std::mt19937_64 rng(seed);
  auto shuffle = [&](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(v[i - 1], v[pick(rng)]);
    }
  };
  std::vector<std::vector<std::size_t>> groups;
  if (stratified) {
    std::map<RelationType, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < pairs.size(); ++i) by_class[pairs[i].label].push_back(i);
    for (auto& [cls, idx] : by_class) groups.push_back(std::move(idx));
  } else {
    std::vector<std::size_t> all(pairs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    groups.push_back(std::move(all));
  }
  std::size_t cursor = 0;
  for (auto& g : groups) {
    shuffle(g);
    for (std::size_t idx : g) {
      auto [it, fresh] = fa.assignments.emplace(pairs[idx].pair, static_cast<int>(cursor % static_cast<std::size_t>(k)));
      if (!fresh) throw Error(ErrorKind::kDuplicateId, "pair " + pairs[idx].pair.str() + " listed twice");
      ++cursor;
    }
  }
  return fa;
}

}  // namespace relx

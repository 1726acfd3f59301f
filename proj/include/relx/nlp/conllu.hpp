#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "relx/corpus/corpus.hpp"
#include "relx/error.hpp"
#include "relx/nlp/parsed.hpp"
#include "relx/nlp/preprocess.hpp"
#include "relx/util.hpp"

namespace relx {

// CoNLL-U reader. Sentences are attached to requirements through the
// "# sent_id = <requirement_id>/<sentence_index>" metadata line; the
// "/<sentence_index>" suffix is optional (file order is used then).
// Multiword ranges ("2-4") and empty nodes ("2.1") are skipped.

namespace detail {

struct ConlluSentence {
  std::string sent_id;
  std::string requirement_id;
  int sentence_index = -1;
  std::size_t line = 0;
  struct Row {
    std::string form, lemma, upos;
    int head = 0;
    std::string deprel;
    std::size_t line = 0;
  };
  std::vector<Row> rows;
};

inline std::vector<ConlluSentence> read_conllu_sentences(std::string_view content, const std::string& source) {
  std::vector<ConlluSentence> out;
  ConlluSentence cur;
  bool open = false;
  auto flush = [&] {
    if (open && !cur.rows.empty()) {
      if (cur.sent_id.empty()) throw line_error(ErrorKind::kParse, source, cur.line, "sentence without '# sent_id'");
      out.push_back(std::move(cur));
    }
    cur = ConlluSentence{};
    open = false;
  };
  auto lines = lines_of(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (!open) {
      open = true;
      cur.line = i + 1;
    }
    if (line.front() == '#') {
      std::string_view body = trim(std::string_view(line).substr(1));
      if (body.rfind("sent_id", 0) == 0) {
        auto eq = body.find('=');
        if (eq == std::string_view::npos) throw line_error(ErrorKind::kParse, source, i + 1, "malformed sent_id line");
        cur.sent_id = std::string(trim(body.substr(eq + 1)));
        auto slash = cur.sent_id.rfind('/');
        cur.requirement_id = cur.sent_id;
        if (slash != std::string::npos) {
          std::string idx = cur.sent_id.substr(slash + 1);
          if (!idx.empty() && std::all_of(idx.begin(), idx.end(), ::isdigit)) {
            cur.requirement_id = cur.sent_id.substr(0, slash);
            cur.sentence_index = std::stoi(idx);
          }
        }
      }
      continue;
    }
    auto f = split(line, '\t');
    if (f.size() != 10)
      throw line_error(ErrorKind::kParse, source, i + 1, "expected 10 tab-separated columns, got " + std::to_string(f.size()));
    if (f[0].find('-') != std::string::npos || f[0].find('.') != std::string::npos) continue;
    ConlluSentence::Row row;
    try {
      int id = std::stoi(f[0]);
      if (id != static_cast<int>(cur.rows.size()) + 1)
        throw line_error(ErrorKind::kParse, source, i + 1, "token ids must be consecutive from 1");
      row.head = f[6] == "_" ? -1 : std::stoi(f[6]);
    } catch (const std::invalid_argument&) {
      throw line_error(ErrorKind::kParse, source, i + 1, "non-numeric ID or HEAD");
    }
    row.form = f[1];
    row.lemma = f[2] == "_" ? std::string() : f[2];
    row.upos = f[3] == "_" ? std::string() : f[3];
    row.deprel = f[7] == "_" ? std::string() : f[7];
    row.line = i + 1;
    cur.rows.push_back(std::move(row));
  }
  flush();
  return out;
}

// Validates that heads form one rooted tree over the sentence.
inline void validate_tree(const ConlluSentence& s, const std::string& source) {
  const int n = static_cast<int>(s.rows.size());
  int roots = 0;
  for (const auto& r : s.rows) {
    if (r.head < 0 || r.head > n)
      throw line_error(ErrorKind::kMalformedTree, source, r.line, "sentence " + s.sent_id + ": head out of range");
    if (r.head == 0) ++roots;
  }
  if (roots != 1)
    throw line_error(ErrorKind::kMalformedTree, source, s.line,
                     "sentence " + s.sent_id + ": expected exactly one root, found " + std::to_string(roots));
  for (int start = 1; start <= n; ++start) {
    int cur = start;
    for (int steps = 0; cur != 0; ++steps) {
      if (steps > n)
        throw line_error(ErrorKind::kMalformedTree, source, s.rows[static_cast<std::size_t>(start - 1)].line,
                         "sentence " + s.sent_id + ": cycle through token " + std::to_string(start));
      cur = s.rows[static_cast<std::size_t>(cur - 1)].head;
    }
  }
}

}  // namespace detail

// Parses CoNLL-U content into one ParsedRequirement per requirement id,
// replacing any tokenization. Stopword flags use `config`.
inline std::map<std::string, ParsedRequirement> parse_conllu(std::string_view content, const Corpus& corpus,
                                                             const PreprocessConfig& config = {},
                                                             const std::string& source = "<conllu>") {
  auto sentences = detail::read_conllu_sentences(content, source);
  std::map<std::string, std::vector<const detail::ConlluSentence*>> by_req;
  for (const auto& s : sentences) {
    if (!corpus.contains(s.requirement_id))
      throw line_error(ErrorKind::kUnmatchedDocument, source, s.line,
                       "sent_id '" + s.sent_id + "' references unknown requirement '" + s.requirement_id + "'");
    detail::validate_tree(s, source);
    by_req[s.requirement_id].push_back(&s);
  }
  std::map<std::string, ParsedRequirement> out;
  for (auto& [id, sents] : by_req) {
    std::stable_sort(sents.begin(), sents.end(), [](auto* a, auto* b) { return a->sentence_index < b->sentence_index; });
    ParsedRequirement p;
    p.requirement_id = id;
    for (const auto* s : sents) {
      const int offset = static_cast<int>(p.tokens.size());
      for (const auto& row : s->rows) {
        Token t;
        t.index = static_cast<int>(p.tokens.size());
        t.surface = row.form;
        normalize_token(t, config);
        if (!row.lemma.empty()) t.lemma = to_lower(row.lemma);
        t.pos = row.upos;
        DependencyArc arc;
        arc.child_index = t.index;
        arc.head_index = row.head == 0 ? kRootHead : offset + row.head - 1;
        arc.dep_label = row.deprel;
        p.arcs.push_back(std::move(arc));
        p.tokens.push_back(std::move(t));
      }
      p.sentences.push_back({offset, static_cast<int>(p.tokens.size())});
    }
    out.emplace(id, std::move(p));
  }
  return out;
}

inline std::map<std::string, ParsedRequirement> ingest_conllu(const Corpus& corpus, const std::filesystem::path& path,
                                                              const PreprocessConfig& config = {}) {
  return parse_conllu(read_file(path), corpus, config, path.string());
}

// Serializes parses (with arcs) back to CoNLL-U using the sent_id convention.
inline std::string to_conllu(const std::vector<const ParsedRequirement*>& parses) {
  std::string out;
  for (const auto* p : parses) {
    for (std::size_t s = 0; s < p->sentences.size(); ++s) {
      const Span& span = p->sentences[s];
      out += "# sent_id = " + p->requirement_id + "/" + std::to_string(s) + "\n";
      out += "# text = " + p->text_of(span) + "\n";
      for (int i = span.begin; i < span.end; ++i) {
        const Token& t = p->tokens[static_cast<std::size_t>(i)];
        const DependencyArc* a = p->arc_of(i);
        std::string head = "_", dep = "_";
        if (a) {
          head = a->is_root() ? "0" : std::to_string(a->head_index - span.begin + 1);
          dep = a->dep_label.empty() ? "_" : a->dep_label;
        }
        out += std::to_string(i - span.begin + 1) + "\t" + t.surface + "\t" + (t.lemma.empty() ? "_" : t.lemma) + "\t" +
               (t.pos.empty() ? "_" : t.pos) + "\t_\t_\t" + head + "\t" + dep + "\t_\t_\n";
      }
      out += "\n";
    }
  }
  return out;
}

// Parses for every corpus requirement: ingested ones where available, the
// preprocessed tokenization otherwise. Result is in corpus order.
inline std::vector<ParsedRequirement> merge_parses(const Corpus& corpus, std::map<std::string, ParsedRequirement> ingested,
                                                   const PreprocessConfig& config = {}) {
  std::vector<ParsedRequirement> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus) {
    auto it = ingested.find(r.id);
    if (it != ingested.end()) out.push_back(std::move(it->second));
    else out.push_back(preprocess(r, config));
  }
  return out;
}

}  // namespace relx

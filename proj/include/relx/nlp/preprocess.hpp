#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "relx/corpus/corpus.hpp"
#include "relx/nlp/parsed.hpp"
#include "relx/util.hpp"

namespace relx {

// Built-in English stopword list. Requirement modals ("shall", "able") are
// included since they carry no content in specification text.
inline const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as", "at",
      "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could",
      "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from", "further", "had", "has",
      "have", "having", "he", "her", "here", "hers", "him", "his", "how", "i", "if", "in", "into", "is",
      "it", "its", "itself", "just", "may", "me", "might", "more", "most", "must", "my", "no", "nor", "not",
      "of", "off", "on", "once", "only", "or", "other", "our", "ours", "out", "over", "own", "same", "shall",
      "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them", "then",
      "there", "these", "they", "this", "those", "through", "to", "too", "under", "until", "up", "very",
      "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with",
      "would", "you", "your", "able", "whether", "upon", "via", "within", "without"};
  return words;
}

// word -> lemma lookup; unknown words map to themselves.
class LemmaTable {
 public:
  LemmaTable() = default;

  static LemmaTable load(const std::filesystem::path& path) {
    LemmaTable t;
    auto lines = lines_of(read_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::string_view l = trim(lines[i]);
      if (l.empty() || l.front() == '#') continue;
      auto f = split(l, '\t');
      if (f.size() != 2 || trim(f[0]).empty() || trim(f[1]).empty())
        throw line_error(ErrorKind::kParse, path.string(), i + 1, "expected 'word<TAB>lemma'");
      t.add(std::string(trim(f[0])), std::string(trim(f[1])));
    }
    return t;
  }

  void add(const std::string& word, const std::string& lemma) { table_[to_lower(word)] = to_lower(lemma); }

  std::string lemma(const std::string& normalized) const {
    auto it = table_.find(normalized);
    return it == table_.end() ? normalized : it->second;
  }

  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, std::string> table_;
};

// Suffix-stripping stemmer (plural and -ed/-ing removal, Porter step 1 style).
inline std::string stem(std::string w) {
  auto ends = [&](std::string_view suf) {
    return w.size() > suf.size() && std::string_view(w).substr(w.size() - suf.size()) == suf;
  };
  auto has_vowel = [](std::string_view s) { return s.find_first_of("aeiouy") != std::string_view::npos; };
  if (ends("sses")) w.resize(w.size() - 2);
  else if (ends("ies")) w.replace(w.size() - 3, 3, "i");
  else if (ends("s") && !ends("ss") && !ends("us") && !ends("is")) w.pop_back();
  if (ends("eed")) {
    w.pop_back();
  } else if (ends("ed") && has_vowel(std::string_view(w).substr(0, w.size() - 2))) {
    w.resize(w.size() - 2);
  } else if (ends("ing") && has_vowel(std::string_view(w).substr(0, w.size() - 3))) {
    w.resize(w.size() - 3);
  } else {
    return w;
  }
  if (ends("at") || ends("bl") || ends("iz")) {
    w += 'e';
  } else if (w.size() >= 2 && w[w.size() - 1] == w[w.size() - 2] && std::string_view("lsz").find(w.back()) == std::string_view::npos &&
             std::string_view("aeiou").find(w.back()) == std::string_view::npos) {
    w.pop_back();
  }
  return w;
}

struct PreprocessConfig {
  bool lowercase = true;
  bool strip_noise = true;
  bool stemming = false;
  std::unordered_set<std::string> stopwords = default_stopwords();
  LemmaTable lemmas;

  // {"lowercase", "strip_noise", "stopword_list", "lemma_table", "stemming"};
  // relative paths resolve against `base_dir`.
  static PreprocessConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    PreprocessConfig c;
    c.lowercase = j.value("lowercase", true);
    c.strip_noise = j.value("strip_noise", true);
    c.stemming = j.value("stemming", false);
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    if (j.contains("stopword_list") && !j.at("stopword_list").is_null()) {
      c.stopwords.clear();
      for (auto& l : lines_of(read_file(resolve(j.at("stopword_list").get<std::string>())))) {
        std::string_view w = trim(l);
        if (!w.empty() && w.front() != '#') c.stopwords.insert(to_lower(w));
      }
    }
    if (j.contains("lemma_table") && !j.at("lemma_table").is_null())
      c.lemmas = LemmaTable::load(resolve(j.at("lemma_table").get<std::string>()));
    return c;
  }
};

namespace detail {

// Replaces common UTF-8 typographic characters with ASCII and drops control
// characters; collapses whitespace runs.
inline std::string clean_text(std::string_view in) {
  static const std::pair<std::string_view, std::string_view> kReplacements[] = {
      {"\xE2\x80\x98", "'"}, {"\xE2\x80\x99", "'"}, {"\xE2\x80\x9C", "\""}, {"\xE2\x80\x9D", "\""},
      {"\xE2\x80\x93", "-"}, {"\xE2\x80\x94", "-"}, {"\xC2\xA0", " "},      {"\xE2\x80\xA6", "..."}};
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size();) {
    bool replaced = false;
    for (auto [from, to] : kReplacements) {
      if (in.substr(i, from.size()) == from) {
        out += to;
        i += from.size();
        replaced = true;
        break;
      }
    }
    if (replaced) continue;
    unsigned char c = static_cast<unsigned char>(in[i]);
    if (c < 0x20 && c != '\t' && c != '\n') {
      out += ' ';
    } else if (c == 0x7F) {
      out += ' ';
    } else {
      out += static_cast<char>(c);
    }
    ++i;
  }
  std::string collapsed;
  bool space = false;
  for (char c : out) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
    } else {
      if (space && !collapsed.empty()) collapsed += ' ';
      space = false;
      collapsed += c;
    }
  }
  return collapsed;
}

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || (static_cast<unsigned char>(c) >= 0x80); }

// Whitespace + punctuation tokenization. Internal hyphens, apostrophes, dots
// and underscores between word characters stay inside a token ("on-board",
// "3.5"); '/' always separates.
inline std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> tokens;
  for (const std::string& chunk : split_ws(text)) {
    std::size_t b = 0, e = chunk.size();
    std::vector<std::string> trailing;
    while (b < e && !is_word_char(chunk[b])) tokens.emplace_back(1, chunk[b++]);
    while (e > b && !is_word_char(chunk[e - 1])) trailing.emplace_back(1, chunk[--e]);
    std::string cur;
    for (std::size_t i = b; i < e; ++i) {
      char c = chunk[i];
      bool internal = (c == '-' || c == '\'' || c == '.' || c == '_') && i + 1 < e && is_word_char(chunk[i + 1]) &&
                      !cur.empty() && is_word_char(cur.back());
      if (is_word_char(c) || internal) {
        cur += c;
      } else {
        if (!cur.empty()) tokens.push_back(std::move(cur));
        cur.clear();
        tokens.emplace_back(1, c);
      }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    tokens.insert(tokens.end(), trailing.rbegin(), trailing.rend());
  }
  return tokens;
}

inline bool is_sentence_end(std::string_view tok) { return tok == "." || tok == "!" || tok == "?"; }

}  // namespace detail

// Computes sentence spans from terminal punctuation tokens.
inline std::vector<Span> split_sentences(const std::vector<Token>& tokens) {
  std::vector<Span> spans;
  int start = 0;
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    if (detail::is_sentence_end(tokens[static_cast<std::size_t>(i)].surface)) {
      spans.push_back({start, i + 1});
      start = i + 1;
    }
  }
  if (start < static_cast<int>(tokens.size())) spans.push_back({start, static_cast<int>(tokens.size())});
  return spans;
}

// Fills normalized form, lemma and stopword flag of a token from its surface.
inline void normalize_token(Token& t, const PreprocessConfig& config) {
  t.normalized = config.lowercase ? to_lower(t.surface) : t.surface;
  std::string folded = to_lower(t.surface);
  t.lemma = config.lemmas.lemma(folded);
  if (config.stemming) t.lemma = stem(t.lemma);
  t.is_stopword = config.stopwords.count(folded) != 0;
}

// clean -> tokenize -> sentence split -> case fold -> lemmatize -> flag stopwords.
// Stopwords are flagged, never removed.
inline ParsedRequirement preprocess(const Requirement& requirement, const PreprocessConfig& config = {}) {
  ParsedRequirement parsed;
  parsed.requirement_id = requirement.id;
  std::string text = config.strip_noise ? detail::clean_text(requirement.text) : requirement.text;
  auto words = detail::tokenize_words(text);
  if (words.empty()) {
    parsed.empty_after_cleaning = true;
    return parsed;
  }
  parsed.tokens.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    Token t;
    t.index = static_cast<int>(i);
    t.surface = std::move(words[i]);
    normalize_token(t, config);
    parsed.tokens.push_back(std::move(t));
  }
  parsed.sentences = split_sentences(parsed.tokens);
  return parsed;
}

inline std::vector<ParsedRequirement> preprocess_corpus(const Corpus& corpus, const PreprocessConfig& config = {}) {
  std::vector<ParsedRequirement> out;
  out.reserve(corpus.size());
  for (const auto& r : corpus) out.push_back(preprocess(r, config));
  return out;
}

}  // namespace relx

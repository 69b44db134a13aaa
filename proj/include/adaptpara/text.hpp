#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace adaptpara {

// Half-open [start, end) range of Unicode scalar offsets.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool Contains(const Span& other) const {
    return start <= other.start && other.end <= end;
  }
  bool Overlaps(const Span& other) const {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

enum class Pos { kNoun, kVerb, kAdj, kAdv, kOther };

std::string_view PosName(Pos pos);
std::optional<Pos> ParsePos(std::string_view name);
inline bool IsContentPos(Pos pos) { return pos != Pos::kOther; }

struct Token {
  Span span;
  std::string surface;
  std::string lemma;
  Pos pos = Pos::kOther;
  bool is_alpha = false;

  friend bool operator==(const Token&, const Token&) = default;
};

// (lowercased surface, pos) -> lemma. File format: surface<TAB>pos<TAB>lemma.
class LemmaLexicon {
 public:
  // Returns the number of malformed lines skipped.
  std::size_t Load(const std::string& path);
  void Add(std::string_view surface, Pos pos, std::string_view lemma);
  std::optional<std::string> Find(std::string_view lower_surface, Pos pos) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, std::string> entries_;
};

// Most-frequent-tag lookup: the first tag listed for a surface wins.
// File format: surface<TAB>pos.
class PosLexicon {
 public:
  std::size_t Load(const std::string& path);
  void Add(std::string_view surface, Pos pos);
  Pos Lookup(std::string_view lower_surface) const;
  std::size_t size() const { return tags_.size(); }

 private:
  std::unordered_map<std::string, Pos> tags_;
};

struct Lexicons {
  LemmaLexicon lemmas;
  PosLexicon tags;
};

struct SegmentOptions {
  std::size_t max_chars = 100000;
};

struct AnnotatedText {
  std::string doc_id;
  std::string text;
  std::u32string codepoints;
  std::vector<Span> sentences;
  std::vector<Token> tokens;
  // Sentence index of every token.
  std::vector<std::size_t> token_sentence;

  std::size_t length() const { return codepoints.size(); }
  std::string Substr(const Span& span) const;

  // Tokens of one sentence as a [first, last) index range.
  std::pair<std::size_t, std::size_t> SentenceTokens(std::size_t sentence) const;
  // Index of the token starting exactly at `offset`, if any.
  std::optional<std::size_t> TokenStartingAt(std::size_t offset) const;
  std::optional<std::size_t> TokenEndingAt(std::size_t offset) const;
};

AnnotatedText Segment(std::string_view text, std::string doc_id,
                      const Lexicons& lexicons, const SegmentOptions& options = {});
AnnotatedText Segment(std::string_view text, std::string doc_id);

// Word and punctuation tokens of a line, without sentence splitting. Used
// to read language-model corpora with the same rules as Segment.
std::vector<std::string> TokenizeSurfaces(std::string_view text);

std::string LemmaOf(const Token& token, const LemmaLexicon& lexicon);

bool IsAbbreviation(std::string_view lower_word);

}  // namespace adaptpara

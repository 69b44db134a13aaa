#include "adaptpara/text.hpp"

#include <algorithm>
#include <array>

#include "adaptpara/error.hpp"
#include "adaptpara/unicode.hpp"
#include "io_util.hpp"

namespace adaptpara {

namespace {

constexpr std::array<std::string_view, 5> kPosNames = {"NOUN", "VERB", "ADJ", "ADV",
                                                       "OTHER"};

// Words that end with a period without ending the sentence.
constexpr std::array<std::string_view, 24> kAbbreviations = {
    "dr", "mr", "mrs", "ms", "prof", "st", "jr", "sr", "vs", "etc", "inc", "ltd",
    "co", "corp", "mt", "fig", "no", "gen", "gov", "sen", "rep", "rev", "approx", "dept"};

bool IsWordChar(char32_t c) { return unicode::IsLetter(c) || unicode::IsDigit(c); }

bool IsJoiner(char32_t c) { return c == '-' || c == '\'' || c == 0x2019; }

bool IsTerminal(char32_t c) { return c == '.' || c == '!' || c == '?'; }

// Token boundaries over decoded text: runs of word characters (joined by
// internal hyphens or apostrophes) and single punctuation characters.
std::vector<Span> TokenSpans(std::u32string_view cps) {
  std::vector<Span> spans;
  std::size_t i = 0;
  const std::size_t n = cps.size();
  while (i < n) {
    if (unicode::IsSpace(cps[i])) {
      ++i;
      continue;
    }
    if (!IsWordChar(cps[i])) {
      spans.push_back({i, i + 1});
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n) {
      if (IsWordChar(cps[j])) {
        ++j;
      } else if (IsJoiner(cps[j]) && j + 1 < n && IsWordChar(cps[j + 1])) {
        j += 2;
      } else {
        break;
      }
    }
    spans.push_back({i, j});
    i = j;
  }
  return spans;
}

bool AllAlpha(std::u32string_view cps) {
  bool has_letter = false;
  for (char32_t c : cps) {
    if (unicode::IsLetter(c)) {
      has_letter = true;
    } else if (!IsJoiner(c)) {
      return false;
    }
  }
  return has_letter;
}

}  // namespace

namespace detail {

std::string NormalizePhrase(std::string_view phrase) {
  std::string lowered = unicode::ToLower(Trim(phrase));
  std::string out;
  out.reserve(lowered.size());
  bool pending_space = false;
  for (char ch : lowered) {
    if (ch == '_' || ch == ' ' || ch == '\t') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(ch);
  }
  return out;
}

}  // namespace detail

std::string_view PosName(Pos pos) { return kPosNames[static_cast<std::size_t>(pos)]; }

std::optional<Pos> ParsePos(std::string_view name) {
  for (std::size_t i = 0; i < kPosNames.size(); ++i) {
    if (kPosNames[i] == name) return static_cast<Pos>(i);
  }
  return std::nullopt;
}

bool IsAbbreviation(std::string_view lower_word) {
  if (unicode::Length(lower_word) == 1) return true;  // initials: "J. Smith"
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), lower_word) !=
         kAbbreviations.end();
}

std::size_t LemmaLexicon::Load(const std::string& path) {
  auto in = detail::OpenOrThrow(path);
  std::size_t skipped = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::IsSkippable(line)) continue;
    const auto fields = detail::Split(line, "\t");
    const auto pos = fields.size() == 3 ? ParsePos(detail::Trim(fields[1])) : std::nullopt;
    if (!pos || detail::Trim(fields[0]).empty() || detail::Trim(fields[2]).empty()) {
      ++skipped;
      continue;
    }
    Add(detail::Trim(fields[0]), *pos, detail::Trim(fields[2]));
  }
  return skipped;
}

void LemmaLexicon::Add(std::string_view surface, Pos pos, std::string_view lemma) {
  std::string key = unicode::ToLower(surface);
  key.push_back('\t');
  key.append(PosName(pos));
  entries_.emplace(std::move(key), unicode::ToLower(lemma));
}

std::optional<std::string> LemmaLexicon::Find(std::string_view lower_surface,
                                              Pos pos) const {
  std::string key(lower_surface);
  key.push_back('\t');
  key.append(PosName(pos));
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::size_t PosLexicon::Load(const std::string& path) {
  auto in = detail::OpenOrThrow(path);
  std::size_t skipped = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::IsSkippable(line)) continue;
    const auto fields = detail::Split(line, "\t");
    const auto pos = fields.size() == 2 ? ParsePos(detail::Trim(fields[1])) : std::nullopt;
    if (!pos || detail::Trim(fields[0]).empty()) {
      ++skipped;
      continue;
    }
    Add(detail::Trim(fields[0]), *pos);
  }
  return skipped;
}

void PosLexicon::Add(std::string_view surface, Pos pos) {
  tags_.emplace(unicode::ToLower(surface), pos);
}

Pos PosLexicon::Lookup(std::string_view lower_surface) const {
  const auto it = tags_.find(std::string(lower_surface));
  return it == tags_.end() ? Pos::kOther : it->second;
}

std::string LemmaOf(const Token& token, const LemmaLexicon& lexicon) {
  std::string lower = unicode::ToLower(token.surface);
  if (auto hit = lexicon.Find(lower, token.pos)) return *std::move(hit);
  return lower;
}

std::string AnnotatedText::Substr(const Span& span) const {
  return unicode::Encode(std::u32string_view(codepoints).substr(span.start, span.length()));
}

std::pair<std::size_t, std::size_t> AnnotatedText::SentenceTokens(
    std::size_t sentence) const {
  const auto first = std::lower_bound(token_sentence.begin(), token_sentence.end(), sentence);
  const auto last = std::upper_bound(first, token_sentence.end(), sentence);
  return {static_cast<std::size_t>(first - token_sentence.begin()),
          static_cast<std::size_t>(last - token_sentence.begin())};
}

std::optional<std::size_t> AnnotatedText::TokenStartingAt(std::size_t offset) const {
  const auto it = std::lower_bound(tokens.begin(), tokens.end(), offset,
                                   [](const Token& t, std::size_t o) { return t.span.start < o; });
  if (it == tokens.end() || it->span.start != offset) return std::nullopt;
  return static_cast<std::size_t>(it - tokens.begin());
}

std::optional<std::size_t> AnnotatedText::TokenEndingAt(std::size_t offset) const {
  const auto it = std::lower_bound(tokens.begin(), tokens.end(), offset,
                                   [](const Token& t, std::size_t o) { return t.span.end < o; });
  if (it == tokens.end() || it->span.end != offset) return std::nullopt;
  return static_cast<std::size_t>(it - tokens.begin());
}

AnnotatedText Segment(std::string_view text, std::string doc_id, const Lexicons& lexicons,
                      const SegmentOptions& options) {
  AnnotatedText out;
  out.doc_id = std::move(doc_id);
  out.text = std::string(text);
  out.codepoints = unicode::Decode(text);

  const auto& cps = out.codepoints;
  if (std::all_of(cps.begin(), cps.end(), [](char32_t c) { return unicode::IsSpace(c); })) {
    throw Error(ErrorCode::kEmptyText, "text is empty");
  }
  if (cps.size() > options.max_chars) {
    throw Error(ErrorCode::kTextTooLarge, "text has " + std::to_string(cps.size()) +
                                              " characters, limit is " +
                                              std::to_string(options.max_chars));
  }

  const std::u32string_view view(cps);
  const auto spans = TokenSpans(view);
  out.tokens.reserve(spans.size());
  for (const Span& span : spans) {
    Token token;
    token.span = span;
    const auto piece = view.substr(span.start, span.length());
    token.surface = unicode::Encode(piece);
    token.is_alpha = AllAlpha(piece);
    const std::string lower = unicode::ToLower(token.surface);
    token.pos = lexicons.tags.Lookup(lower);
    token.lemma = LemmaOf(token, lexicons.lemmas);
    out.tokens.push_back(std::move(token));
  }

  // A terminal mark ends a sentence when whitespace and an uppercase letter
  // follow, unless it is a period glued to an abbreviation.
  std::size_t sentence_first = 0;
  auto close_sentence = [&](std::size_t last_token) {
    out.sentences.push_back(
        {out.tokens[sentence_first].span.start, out.tokens[last_token].span.end});
    for (std::size_t t = sentence_first; t <= last_token; ++t) {
      out.token_sentence.push_back(out.sentences.size() - 1);
    }
    sentence_first = last_token + 1;
  };
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    const Token& tok = out.tokens[i];
    if (i + 1 == out.tokens.size()) {
      close_sentence(i);
      break;
    }
    if (tok.span.length() != 1 || !IsTerminal(cps[tok.span.start])) continue;
    const Token& next = out.tokens[i + 1];
    if (next.span.start == tok.span.end) continue;
    if (!unicode::IsUpper(cps[next.span.start])) continue;
    if (cps[tok.span.start] == '.' && i > 0 && i > sentence_first) {
      const Token& prev = out.tokens[i - 1];
      if (prev.span.end == tok.span.start &&
          IsAbbreviation(unicode::ToLower(prev.surface))) {
        continue;
      }
    }
    close_sentence(i);
  }
  return out;
}

AnnotatedText Segment(std::string_view text, std::string doc_id) {
  static const Lexicons kEmpty;
  return Segment(text, std::move(doc_id), kEmpty);
}

std::vector<std::string> TokenizeSurfaces(std::string_view text) {
  const std::u32string cps = unicode::Decode(text);
  std::vector<std::string> out;
  for (const Span& span : TokenSpans(cps)) {
    out.push_back(unicode::Encode(std::u32string_view(cps).substr(span.start, span.length())));
  }
  return out;
}

}  // namespace adaptpara

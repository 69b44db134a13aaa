#include <random>
#include <string>

#include "adaptpara/error.hpp"
#include "adaptpara/text.hpp"
#include "adaptpara/unicode.hpp"
#include "doctest.h"

using namespace adaptpara;

namespace {

std::vector<std::string> Surfaces(const AnnotatedText& t) {
  std::vector<std::string> out;
  for (const auto& tok : t.tokens) out.push_back(tok.surface);
  return out;
}

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an adaptpara::Error");
  return ErrorCode::kParseError;
}

}  // namespace

TEST_CASE("simple sentence segmentation") {
  const auto t = Segment("The cat sat.", "d1");
  CHECK(t.sentences.size() == 1);
  CHECK(Surfaces(t) == std::vector<std::string>{"The", "cat", "sat", "."});
  CHECK(t.tokens[1].span == Span{4, 7});
  CHECK(t.tokens[1].is_alpha);
  CHECK_FALSE(t.tokens[3].is_alpha);
  CHECK(t.sentences[0] == Span{0, 12});
}

TEST_CASE("blank input is rejected") {
  CHECK(CodeOf([] { Segment("", "d"); }) == ErrorCode::kEmptyText);
  CHECK(CodeOf([] { Segment(" \n\t ", "d"); }) == ErrorCode::kEmptyText);
}

TEST_CASE("text over the configured limit is rejected") {
  Lexicons lex;
  SegmentOptions opts;
  opts.max_chars = 10;
  CHECK(CodeOf([&] { Segment("abcdefghijk", "d", lex, opts); }) == ErrorCode::kTextTooLarge);
  CHECK_NOTHROW(Segment("abcdefghij", "d", lex, opts));
}

TEST_CASE("abbreviations do not end sentences") {
  // Trace: "Dr" is on the stop-list, so the first period is skipped; "left."
  // is followed by space + uppercase "He", so it closes sentence one.
  const auto t = Segment("Dr. Smith left. He ran.", "d");
  REQUIRE(t.sentences.size() == 2);
  CHECK(t.Substr(t.sentences[0]) == "Dr. Smith left.");
  CHECK(t.Substr(t.sentences[1]) == "He ran.");
}

TEST_CASE("sentence boundaries need whitespace and an uppercase start") {
  CHECK(Segment("It costs 3.5 dollars. ok then", "d").sentences.size() == 1);
  CHECK(Segment("Wait! Go now? Yes.", "d").sentences.size() == 3);
  CHECK(Segment("Really?! No.", "d").sentences.size() == 2);
}

TEST_CASE("hyphenated words and contractions stay whole") {
  const auto t = Segment("A well-known state-of-the-art don't.", "d");
  CHECK(Surfaces(t) ==
        std::vector<std::string>{"A", "well-known", "state-of-the-art", "don't", "."});
  CHECK(t.tokens[1].is_alpha);
  const auto dash = Segment("word - other -x", "d");
  CHECK(Surfaces(dash) == std::vector<std::string>{"word", "-", "other", "-", "x"});
}

TEST_CASE("offsets count code points") {
  const auto t = Segment("Café au lait.", "d");
  REQUIRE(t.tokens.size() == 4);
  CHECK(t.tokens[0].surface == "Café");
  CHECK(t.tokens[0].span == Span{0, 4});
  CHECK(t.tokens[1].span == Span{5, 7});
  CHECK(t.length() == 13);
  CHECK(t.tokens[0].lemma == "café");
}

TEST_CASE("lemma lookup") {
  LemmaLexicon lex;
  lex.Add("ran", Pos::kVerb, "run");
  lex.Add("running", Pos::kVerb, "run");
  Token ran{{0, 3}, "ran", "", Pos::kVerb, true};
  Token cat{{0, 3}, "cat", "", Pos::kNoun, true};
  Token running{{0, 7}, "Running", "", Pos::kVerb, true};
  CHECK(LemmaOf(ran, lex) == "run");
  CHECK(LemmaOf(cat, lex) == "cat");
  CHECK(LemmaOf(running, lex) == "run");
  // Entries are keyed by POS as well.
  Token ran_noun{{0, 3}, "ran", "", Pos::kNoun, true};
  CHECK(LemmaOf(ran_noun, lex) == "ran");
}

TEST_CASE("lexicon files feed segmentation") {
  Lexicons lex;
  CHECK(lex.tags.Load(ADAPTPARA_FIXTURES "/pos.tsv") == 0);
  CHECK(lex.lemmas.Load(ADAPTPARA_FIXTURES "/lemmas.tsv") == 0);
  const auto t = Segment("The dog ran quickly.", "d", lex);
  CHECK(t.tokens[1].pos == Pos::kNoun);
  CHECK(t.tokens[2].pos == Pos::kVerb);
  CHECK(t.tokens[2].lemma == "run");
  CHECK(t.tokens[3].pos == Pos::kAdv);
  CHECK(t.tokens[0].pos == Pos::kOther);
}

TEST_CASE("missing lexicon file") {
  LemmaLexicon lex;
  CHECK(CodeOf([&] { lex.Load("/nonexistent/lemmas.tsv"); }) == ErrorCode::kFileNotFound);
}

TEST_CASE("property: segmentation invariants on random text") {
  const std::u32string alphabet = U"abcXYZ  \n.!?,-'é日19Dr";
  std::mt19937_64 rng(7);
  for (int iter = 0; iter < 500; ++iter) {
    std::uniform_int_distribution<std::size_t> len_dist(1, 60);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::u32string cps;
    const auto len = len_dist(rng);
    for (std::size_t i = 0; i < len; ++i) cps.push_back(alphabet[pick(rng)]);
    const std::string text = unicode::Encode(cps);
    AnnotatedText t;
    try {
      t = Segment(text, "p");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptyText);
      continue;
    }
    CHECK(Segment(text, "p").tokens == t.tokens);
    CHECK(Segment(text, "p").sentences == t.sentences);
    REQUIRE(t.token_sentence.size() == t.tokens.size());

    // Reconstruct the text from token surfaces and the gaps between them.
    std::u32string rebuilt;
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < t.tokens.size(); ++i) {
      const auto& tok = t.tokens[i];
      CHECK(tok.span.start < tok.span.end);
      CHECK(tok.span.end <= t.length());
      CHECK(tok.span.start >= cursor);
      for (std::size_t g = cursor; g < tok.span.start; ++g) {
        CHECK(unicode::IsSpace(cps[g]));
      }
      rebuilt += cps.substr(cursor, tok.span.start - cursor);
      CHECK(tok.surface == t.Substr(tok.span));
      rebuilt += unicode::Decode(tok.surface);
      cursor = tok.span.end;
      const auto& sentence = t.sentences[t.token_sentence[i]];
      CHECK(sentence.Contains(tok.span));
      std::size_t containing = 0;
      for (const auto& s : t.sentences) containing += s.Contains(tok.span) ? 1 : 0;
      CHECK(containing == 1);
    }
    rebuilt += cps.substr(cursor);
    CHECK(rebuilt == cps);
  }
}

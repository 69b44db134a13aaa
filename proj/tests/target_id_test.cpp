#include <algorithm>
#include <cmath>
#include <random>

#include "adaptpara/error.hpp"
#include "adaptpara/target_id.hpp"
#include "doctest.h"

using namespace adaptpara;

namespace {

const std::string kFix = ADAPTPARA_FIXTURES;

Assets FixtureAssets() {
  Assets a;
  a.lexicons.tags.Load(kFix + "/pos.tsv");
  a.lexicons.lemmas.Load(kFix + "/lemmas.tsv");
  a.frequencies.Load(kFix + "/target/freq.tsv");
  a.providers.AddRules(LoadSynlex(kFix + "/target/synlex.tsv"), "SYNLEX");
  a.mwe_lexicon.Load(kFix + "/target/mwe.txt");
  a.seed_targets.Load(kFix + "/target/seed.txt");
  return a;
}

UsageEvent Ev(std::uint64_t seq, EventKind kind, Span span, std::string doc = "d1") {
  UsageEvent e;
  e.seq = seq;
  e.session_id = "s";
  e.doc_id = std::move(doc);
  e.kind = kind;
  e.span = span;
  if (kind == EventKind::kReplace) {
    e.displayed_candidates = {"x", "y"};
    e.selected_candidate = "x";
  }
  return e;
}

UsageEvent Undo(std::uint64_t seq, std::uint64_t of) {
  UsageEvent e;
  e.seq = seq;
  e.session_id = "s";
  e.doc_id = "d1";
  e.kind = EventKind::kUndo;
  e.undo_of = of;
  return e;
}

// Independent evaluation of a prefix of the ensemble.
std::vector<double> ErrorPerRound(const StumpEnsemble& m, const std::vector<std::vector<double>>& x,
                                  const std::vector<int>& y) {
  std::vector<double> out;
  for (std::size_t k = 1; k <= m.stumps.size(); ++k) {
    int wrong = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double f = 0;
      for (std::size_t s = 0; s < k; ++s) {
        const auto& st = m.stumps[s];
        f += st.alpha * (x[i][st.feature] > st.threshold ? st.polarity : -st.polarity);
      }
      wrong += (f > 0 ? 1 : -1) != y[i];
    }
    out.push_back(static_cast<double>(wrong) / static_cast<double>(x.size()));
  }
  return out;
}

}  // namespace

TEST_CASE("features: cat is short, one syllable, sentence initial") {
  const Assets a = FixtureAssets();
  const auto t = a.SegmentText("Cat sat.", "d");
  const auto f = ExtractTargetFeatures(t, {0, 3}, a);
  CHECK(f[TargetFeatures::kLengthChars] == 3);
  CHECK(f[TargetFeatures::kLengthSyllables] == 1);
  CHECK(f[TargetFeatures::kSentencePosition] == 0.0);
  CHECK(f[TargetFeatures::kPosIsContent] == 1.0);
}

TEST_CASE("features: absent from frequency list gives zero") {
  const Assets a = FixtureAssets();
  const auto t = a.SegmentText("Zorp.", "d");
  CHECK(ExtractTargetFeatures(t, {0, 4}, a)[TargetFeatures::kCorpusLogFreq] == 0.0);
}

TEST_CASE("features: extraordinarily, full vector") {
  // by hand from fixtures: 15 chars; e-x-tr-ao-rd-i-n-a-r-i-l-y has vowel groups
  // e, ao, i, a, i, y; freq 150; ADV; token 2 of 5 -> 2/4; three SYNLEX rules.
  const Assets a = FixtureAssets();
  const auto t = a.SegmentText("She was extraordinarily kind.", "d");
  const auto f = ExtractTargetFeatures(t, {8, 23}, a);
  CHECK(f[TargetFeatures::kLengthChars] == 15);
  CHECK(f[TargetFeatures::kLengthSyllables] == 6);
  CHECK(f[TargetFeatures::kCorpusLogFreq] == doctest::Approx(std::log10(150.0)).epsilon(1e-12));
  CHECK(f[TargetFeatures::kInMweLexicon] == 0.0);
  CHECK(f[TargetFeatures::kPosIsContent] == 1.0);
  CHECK(f[TargetFeatures::kSentencePosition] == 0.5);
  CHECK(f[TargetFeatures::kCandidateAvailability] ==
        doctest::Approx(std::log10(4.0)).epsilon(1e-12));
}

TEST_CASE("features: multiword expression") {
  const Assets a = FixtureAssets();
  const auto t = a.SegmentText("He will kick the bucket soon.", "d");
  const auto f = ExtractTargetFeatures(t, {8, 23}, a);
  CHECK(f[TargetFeatures::kLengthChars] == 15);
  CHECK(f[TargetFeatures::kLengthSyllables] == 4);
  CHECK(f[TargetFeatures::kInMweLexicon] == 1.0);
  CHECK(f[TargetFeatures::kPosIsContent] == 0.0);
  CHECK(f[TargetFeatures::kSentencePosition] == doctest::Approx(2.0 / 6.0));
  CHECK(f[TargetFeatures::kCandidateAvailability] == 0.0);
  // a single word from the lexicon phrase is not an MWE hit
  CHECK(ExtractTargetFeatures(t, {8, 12}, a)[TargetFeatures::kInMweLexicon] == 0.0);
}

TEST_CASE("features: misaligned and out of range spans") {
  const Assets a = FixtureAssets();
  const auto t = a.SegmentText("The cat sat. A dog ran.", "d");
  auto code = [&](Span s) {
    try {
      ExtractTargetFeatures(t, s, a);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIoFailure;
  };
  CHECK(code({1, 3}) == ErrorCode::kSpanMisaligned);
  CHECK(code({4, 6}) == ErrorCode::kSpanMisaligned);
  CHECK(code({8, 14}) == ErrorCode::kSpanMisaligned);  // crosses a sentence boundary
  CHECK(code({0, 99}) == ErrorCode::kSpanOutOfRange);
  CHECK(code({3, 3}) == ErrorCode::kSpanOutOfRange);
}

TEST_CASE("adaboost: separable 1-D data needs one stump") {
  const std::vector<std::vector<double>> x = {{0}, {1}, {2}, {3}};
  const std::vector<int> y = {-1, -1, 1, 1};
  const auto m = TrainAdaBoost(x, y);
  REQUIRE(m.stumps.size() == 1);
  CHECK(m.stumps[0].threshold > 1.0);
  CHECK(m.stumps[0].threshold < 2.0);
  CHECK(m.stumps[0].polarity == 1);
  CHECK(TrainingError(m, x, y, 1) == 0.0);
}

TEST_CASE("adaboost: precondition errors") {
  auto code = [](const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                 int rounds = 50) {
    try {
      TrainAdaBoost(x, y, {rounds});
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIoFailure;
  };
  CHECK(code({{0}, {1}}, {1, 1}) == ErrorCode::kSingleClassData);
  CHECK(code({}, {}) == ErrorCode::kNoExamples);
  CHECK(code({{0}, {1}}, {1, -1}, 0) == ErrorCode::kConfigError);
  CHECK(code({{5}, {5}}, {1, -1}) == ErrorCode::kDegenerateFeatures);
  // 2-D XOR: every stump has error exactly one half
  CHECK(code({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {1, 1, -1, -1}) == ErrorCode::kDegenerateFeatures);
}

TEST_CASE("adaboost: XOR-like 1-D trace") {
  // reference: tests/oracles/target_oracle.py (brute-force stump search)
  const std::vector<std::vector<double>> x = {{0}, {1}, {2}, {3}};
  const std::vector<int> y = {1, -1, -1, 1};
  const auto m = TrainAdaBoost(x, y, {3});
  REQUIRE(m.stumps.size() == 3);
  CHECK(m.stumps[0] == Stump{0, 0.5, -1, m.stumps[0].alpha});
  CHECK(m.stumps[1] == Stump{0, 2.5, 1, m.stumps[1].alpha});
  CHECK(m.stumps[2] == Stump{0, 0.5, -1, m.stumps[2].alpha});
  CHECK(m.stumps[0].alpha == doctest::Approx(0.5493061443340549).epsilon(1e-12));  // eps 1/4
  CHECK(m.stumps[1].alpha == doctest::Approx(0.8047189562170503).epsilon(1e-12));  // eps 1/6
  CHECK(m.stumps[2].alpha == doctest::Approx(0.4236489301936017).epsilon(1e-12));  // eps 3/10
  const auto err = ErrorPerRound(m, x, y);
  CHECK(err == std::vector<double>{0.25, 0.25, 0.25});
  // stumps alone can never fit this pattern, so more rounds never go below 1/4
  const auto long_run = TrainAdaBoost(x, y, {50});
  CHECK(long_run.stumps.size() == 50);
  CHECK(long_run.stumps[49].alpha == doctest::Approx(0.02020476916893835).epsilon(1e-9));
  CHECK(TrainingError(long_run, x, y, 50) == 0.25);
}

TEST_CASE("property: adaboost training error on random small datasets") {
  // The classic guarantee bounds the exponential loss, not the 0/1 error, so
  // this counts how often the 0/1 error goes up between consecutive rounds.
  std::mt19937_64 rng(7);
  int increases = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 15);
    const int dim = 1 + static_cast<int>(rng() % 3);
    std::vector<std::vector<double>> x(n, std::vector<double>(dim));
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      for (auto& v : x[i]) v = static_cast<double>(rng() % 10);
      y[i] = i % 2 == 0 ? 1 : -1;
    }
    StumpEnsemble m;
    try {
      m = TrainAdaBoost(x, y, {20});
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDegenerateFeatures);
      continue;
    }
    const auto err = ErrorPerRound(m, x, y);
    for (std::size_t k = 1; k < err.size(); ++k) increases += err[k] > err[k - 1] ? 1 : 0;
    // what the theory does promise: mean exp(-y f) shrinks every round
    double prev = 1.0;
    for (std::size_t k = 1; k <= m.stumps.size(); ++k) {
      double loss = 0;
      for (int i = 0; i < n; ++i) {
        double f = 0;
        for (std::size_t s = 0; s < k; ++s) f += m.stumps[s].alpha * m.stumps[s].Vote(x[i]);
        loss += std::exp(-y[i] * f) / n;
      }
      CHECK(loss <= prev + 1e-12);
      prev = loss;
    }
    for (const auto& s : m.stumps) CHECK(std::isfinite(s.alpha));
  }
  MESSAGE("0/1 error increases across rounds: " << increases);
}

TEST_CASE("predict: single stump flags rare words") {
  const Assets a = FixtureAssets();
  StumpEnsemble m;
  m.stumps.push_back({TargetFeatures::kCorpusLogFreq, 2.0, -1, 1.0});  // freq <= 2 -> +1
  const auto t = a.SegmentText("The meticulous dog ran.", "d");
  const auto out = PredictTargets(t, m, a);
  REQUIRE(out.size() == 1);
  CHECK(out[0].surface == "meticulous");
  CHECK(out[0].provenance == TargetProvenance::kModel);
}

TEST_CASE("predict: no alpha tokens, empty model") {
  const Assets a = FixtureAssets();
  StumpEnsemble m;
  m.stumps.push_back({0, 0.0, 1, 1.0});
  CHECK(PredictTargets(a.SegmentText("... 42 !!", "d"), m, a).empty());
  CHECK_THROWS_AS(PredictTargets(a.SegmentText("word", "d"), StumpEnsemble{}, a), Error);
}

TEST_CASE("predict: fixture sentence and three stumps") {
  // Per token (freq<=3 ? +1 : -1)*1.0 + (len>6.5 ? +1 : -1)*0.8 + (content ? +1 : -1)*0.3.
  // meticulous +1+0.8-0.3, kindhearted +1+0.8-0.3; Zap and went +1-0.8-0.3 = -0.1;
  // dog, ran, cat -1-0.8+0.3; The, the -1-0.8-0.3.
  const Assets a = FixtureAssets();
  StumpEnsemble m;
  m.stumps = {{TargetFeatures::kCorpusLogFreq, 3.0, -1, 1.0},
              {TargetFeatures::kLengthChars, 6.5, 1, 0.8},
              {TargetFeatures::kPosIsContent, 0.5, 1, 0.3}};
  const auto t = a.SegmentText("The meticulous dog ran. Zap went the kindhearted cat.", "d");
  const auto out = PredictTargets(t, m, a);
  REQUIRE(out.size() == 2);
  CHECK(out[0].span == Span{4, 14});
  CHECK(out[0].margin == doctest::Approx(1.5));
  CHECK(out[1].span == Span{37, 48});
  CHECK(out[1].sentence == 1);
  // threshold is exclusive and tunable
  CHECK(PredictTargets(t, m, a, 1.5).empty());
  CHECK(PredictTargets(t, m, a, -0.2).size() == 4);
}

TEST_CASE("candidate spans: longest MWE match, no overlap") {
  const Assets a = FixtureAssets();
  const auto t = a.SegmentText("He will kick the bucket soon. New York is big.", "d");
  const auto spans = CandidateTargetSpans(t, a.mwe_lexicon);
  const std::vector<Span> want = {{0, 2}, {3, 7}, {8, 23}, {24, 28}, {30, 38}, {39, 41}, {42, 45}};
  CHECK(spans == want);
}

TEST_CASE("seed targets") {
  const Assets a = FixtureAssets();
  const auto out = SeedTargets(a.SegmentText("A meticulous and extraordinarily dull cat.", "d"), a);
  REQUIRE(out.size() == 2);
  CHECK(out[0].surface == "meticulous");
  CHECK(out[1].surface == "extraordinarily");
  CHECK(out[1].provenance == TargetProvenance::kSeed);
}

TEST_CASE("training set: one replace in a six-token sentence") {
  const Assets a = FixtureAssets();
  DocumentMap docs;
  docs.emplace("d1", a.SegmentText("The cat sat on the mat", "d1"));
  const auto set = AssembleTrainingSet({Ev(1, EventKind::kReplace, {4, 7})}, docs, a, 42);
  REQUIRE(set.size() == 4);
  CHECK(set[0].label == 1);
  CHECK(set[0].source == ExampleSource::kUserReplace);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(set[i].label == -1);
    CHECK(set[i].source == ExampleSource::kNegativeSampled);
    CHECK(!set[i].span.Overlaps({4, 7}));
  }
}

TEST_CASE("training set: undo cancels, empty in empty out") {
  const Assets a = FixtureAssets();
  DocumentMap docs;
  docs.emplace("d1", a.SegmentText("The cat sat on the mat", "d1"));
  CHECK(AssembleTrainingSet({Ev(1, EventKind::kReplace, {4, 7}), Undo(2, 1)}, docs, a, 42).empty());
  CHECK(AssembleTrainingSet({}, docs, a, 42).empty());
  // events on unknown documents or misaligned spans are skipped
  CHECK(AssembleTrainingSet({Ev(1, EventKind::kHighlight, {4, 7}, "nope"),
                             Ev(2, EventKind::kHighlight, {5, 7})},
                            docs, a, 42)
            .empty());
}

TEST_CASE("training set: fixture log with seed 42") {
  // reference: tests/oracles/target_oracle.py (own mt19937_64)
  const Assets a = FixtureAssets();
  DocumentMap docs;
  docs.emplace("d1",
               a.SegmentText("The cat sat on the old mat by the door. A dog ran far away today.", "d1"));
  std::vector<UsageEvent> log = {Ev(1, EventKind::kHighlight, {4, 7}),
                                 Ev(2, EventKind::kReplace, {23, 26}),
                                 Ev(3, EventKind::kAutoHighlightShown, {42, 45}),
                                 Ev(4, EventKind::kHighlight, {54, 58}), Undo(5, 2)};
  const auto set = AssembleTrainingSet(log, docs, a, 42);
  std::vector<std::pair<Span, int>> got;
  for (const auto& ex : set) got.emplace_back(ex.span, ex.label);
  const std::vector<std::pair<Span, int>> want = {
      {{4, 7}, 1},    {{54, 58}, 1},  {{15, 18}, -1}, {{8, 11}, -1},
      {{30, 33}, -1}, {{46, 49}, -1}, {{40, 41}, -1}, {{59, 64}, -1}};
  CHECK(got == want);
  // determinism: same input, same set and same ensemble
  const auto again = AssembleTrainingSet(log, docs, a, 42);
  CHECK(again == set);
  CHECK(TrainAdaBoost(set) == TrainAdaBoost(again));
}

TEST_CASE("property: predicted spans never overlap and align to tokens") {
  const Assets a = FixtureAssets();
  std::mt19937_64 rng(11);
  const std::vector<std::string> words = {"the", "meticulous", "dog", "kick", "bucket", "new",
                                          "York", "ran", "extraordinarily", "cat", ",", "kind"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      if (i > 0) text += ' ';
      text += words[rng() % words.size()];
    }
    text += '.';
    const auto t = a.SegmentText(text, "d");
    StumpEnsemble m;
    m.stumps = {{static_cast<std::size_t>(rng() % kTargetFeatureCount),
                 static_cast<double>(rng() % 10), rng() % 2 ? 1 : -1, 1.0}};
    const auto out = PredictTargets(t, m, a, -1.0);  // everything
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(t.TokenStartingAt(out[i].span.start).has_value());
      CHECK(t.TokenEndingAt(out[i].span.end).has_value());
      if (i > 0) CHECK(out[i - 1].span.end <= out[i].span.start);
    }
  }
}

TEST_CASE("property: an agreeing stump never lowers the margin") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 500; ++trial) {
    std::array<double, kTargetFeatureCount> x{};
    for (auto& v : x) v = u(rng);
    const int label = rng() % 2 ? 1 : -1;
    StumpEnsemble m;
    for (int s = 0; s < 3; ++s) {
      m.stumps.push_back({rng() % kTargetFeatureCount, u(rng), rng() % 2 ? 1 : -1, u(rng) + 5.0});
    }
    const double before = label * m.Margin(x);
    Stump extra{rng() % kTargetFeatureCount, u(rng), 1, 0.1 + (u(rng) + 5.0)};
    if (extra.Vote(x) != label) extra.polarity = -1;
    m.stumps.push_back(extra);
    CHECK(label * m.Margin(x) >= before);
  }
}

TEST_CASE("serialization round trip is exact") {
  const std::vector<std::vector<double>> x = {{0.1, 3}, {1.7, 2}, {2.2, 9}, {3.3, 1}, {0.4, 4}};
  const std::vector<int> y = {1, -1, -1, 1, 1};
  auto m = TrainAdaBoost(x, y, {7});
  m.version = "target-it3-0011223344556677";
  m.trained_after_iteration = 3;
  const auto json = SerializeEnsemble(m);
  CHECK(ParseEnsemble(json) == m);
  CHECK(SerializeEnsemble(ParseEnsemble(json)) == json);

  auto doctored = json;
  const auto at = doctored.find("length_chars");
  doctored.replace(at, 12, "length_charz");
  std::string hash_key = "\"feature_order_hash\":\"";
  const auto h = doctored.find(hash_key) + hash_key.size();
  doctored[h] = doctored[h] == '0' ? '1' : '0';
  try {
    ParseEnsemble(doctored);
    FAIL("expected mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFeatureOrderMismatch);
  }
  CHECK_THROWS_AS(ParseEnsemble("{"), Error);
}

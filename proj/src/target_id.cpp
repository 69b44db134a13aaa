#include "adaptpara/target_id.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "adaptpara/checksum.hpp"
#include "adaptpara/error.hpp"
#include "adaptpara/unicode.hpp"
#include "json.hpp"

namespace adaptpara {

const std::array<std::string_view, kTargetFeatureCount> kTargetFeatureNames = {
    "length_chars",      "length_syllables",  "corpus_log_freq",       "in_mwe_lexicon",
    "pos_is_content",    "sentence_position", "candidate_availability"};

namespace {

constexpr double kEpsilonFloor = 1e-10;

struct TokenRange {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
  std::size_t sentence = 0;
};

TokenRange Resolve(const AnnotatedText& text, const Span& span) {
  if (span.start >= span.end || span.end > text.length()) {
    throw Error(ErrorCode::kSpanOutOfRange,
                "span [" + std::to_string(span.start) + "," + std::to_string(span.end) +
                    ") outside text of length " + std::to_string(text.length()));
  }
  const auto first = text.TokenStartingAt(span.start);
  const auto last = text.TokenEndingAt(span.end);
  if (!first || !last || *last < *first ||
      text.token_sentence[*first] != text.token_sentence[*last]) {
    throw Error(ErrorCode::kSpanMisaligned,
                "span [" + std::to_string(span.start) + "," + std::to_string(span.end) +
                    ") does not align to tokens of one sentence");
  }
  return {*first, *last, text.token_sentence[*first]};
}

std::string JoinLemmas(const AnnotatedText& text, const TokenRange& r) {
  std::string out;
  for (std::size_t i = r.first; i <= r.last; ++i) {
    if (i > r.first) out.push_back(' ');
    out += text.tokens[i].lemma;
  }
  return out;
}

std::string JoinLowerSurfaces(const AnnotatedText& text, std::size_t first, std::size_t last) {
  std::string out;
  for (std::size_t i = first; i <= last; ++i) {
    if (i > first) out.push_back(' ');
    out += unicode::ToLower(text.tokens[i].surface);
  }
  return out;
}

double VowelGroups(std::string_view lower_surface) {
  auto is_vowel = [](char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
  };
  double groups = 0;
  bool in_group = false;
  for (char c : lower_surface) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  return groups;
}

TargetFeatures FeaturesFor(const AnnotatedText& text, const Span& span, const TokenRange& r,
                           const std::string& lemma, Pos pos, const Assets& assets) {
  TargetFeatures f;
  const std::string surface = text.Substr(span);
  const std::string lower = unicode::ToLower(surface);
  f.values[TargetFeatures::kLengthChars] = static_cast<double>(span.length());
  f.values[TargetFeatures::kLengthSyllables] = VowelGroups(lower);
  f.values[TargetFeatures::kCorpusLogFreq] = assets.frequencies.LogFrequency(lower);
  const bool multiword = r.last > r.first;
  f.values[TargetFeatures::kInMweLexicon] =
      multiword && (assets.mwe_lexicon.Contains(lemma) || assets.mwe_lexicon.Contains(lower))
          ? 1.0
          : 0.0;
  bool content = false;
  for (std::size_t i = r.first; i <= r.last; ++i) content |= IsContentPos(text.tokens[i].pos);
  f.values[TargetFeatures::kPosIsContent] = content ? 1.0 : 0.0;
  const auto [s_first, s_last] = text.SentenceTokens(r.sentence);
  const std::size_t n = s_last - s_first;
  f.values[TargetFeatures::kSentencePosition] =
      n > 1 ? static_cast<double>(r.first - s_first) / static_cast<double>(n - 1) : 0.0;
  double available = 0.0;
  if (!assets.providers.empty()) {
    const auto set = CandidatesFor(lemma, pos, assets.providers, assets.k_embed);
    available = std::log10(1.0 + static_cast<double>(set.candidates.size()));
  }
  f.values[TargetFeatures::kCandidateAvailability] = available;
  return f;
}

Pos PosOf(const AnnotatedText& text, const TokenRange& r) {
  return r.first == r.last ? text.tokens[r.first].pos : Pos::kOther;
}

void ValidateTrainingData(const std::vector<std::vector<double>>& rows,
                          const std::vector<int>& labels, const AdaBoostOptions& options) {
  if (rows.empty()) throw Error(ErrorCode::kNoExamples, "no training examples");
  if (rows.size() != labels.size()) {
    throw Error(ErrorCode::kNoExamples, "feature rows and labels differ in length");
  }
  if (options.rounds < 1) throw Error(ErrorCode::kConfigError, "rounds must be >= 1");
  bool pos = false;
  bool neg = false;
  for (int y : labels) {
    if (y == 1) pos = true;
    else if (y == -1) neg = true;
    else throw Error(ErrorCode::kNoExamples, "labels must be +1 or -1");
  }
  if (!pos || !neg) throw Error(ErrorCode::kSingleClassData, "training data has one class");
  const std::size_t dim = rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "ragged feature rows");
  }
}

}  // namespace

std::string_view ProvenanceName(TargetProvenance p) {
  switch (p) {
    case TargetProvenance::kModel: return "MODEL";
    case TargetProvenance::kUser: return "USER";
    case TargetProvenance::kSeed: return "SEED";
  }
  return "?";
}

double StumpEnsemble::Margin(std::span<const double> x) const {
  double margin = 0.0;
  for (const auto& s : stumps) margin += s.alpha * s.Vote(x);
  return margin;
}

StumpEnsemble TrainAdaBoost(const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& labels, const AdaBoostOptions& options) {
  ValidateTrainingData(rows, labels, options);
  const std::size_t n = rows.size();
  const std::size_t dim = rows.front().size();

  std::vector<std::vector<std::size_t>> sorted(dim);
  for (std::size_t f = 0; f < dim; ++f) {
    auto& order = sorted[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rows[a][f] < rows[b][f]; });
  }

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  StumpEnsemble model;
  for (int round = 0; round < options.rounds; ++round) {
    double w_pos = 0.0;
    double w_neg = 0.0;
    for (std::size_t i = 0; i < n; ++i) (labels[i] > 0 ? w_pos : w_neg) += w[i];

    double best_err = std::numeric_limits<double>::infinity();
    Stump best;
    for (std::size_t f = 0; f < dim; ++f) {
      const auto& order = sorted[f];
      // Weight of each class at or below the current threshold.
      double le_pos = 0.0;
      double le_neg = 0.0;
      std::size_t k = 0;
      while (k < n) {
        const double value = rows[order[k]][f];
        while (k < n && rows[order[k]][f] == value) {
          (labels[order[k]] > 0 ? le_pos : le_neg) += w[order[k]];
          ++k;
        }
        if (k == n) break;
        const double threshold = value + (rows[order[k]][f] - value) / 2.0;
        // polarity +1 votes +1 above the threshold.
        const double err_plus = le_pos + (w_neg - le_neg);
        const double err_minus = le_neg + (w_pos - le_pos);
        if (err_plus < best_err) {
          best_err = err_plus;
          best = {f, threshold, 1, 0.0};
        }
        if (err_minus < best_err) {
          best_err = err_minus;
          best = {f, threshold, -1, 0.0};
        }
      }
    }
    if (!std::isfinite(best_err)) {
      throw Error(ErrorCode::kDegenerateFeatures, "every feature is constant");
    }
    const double eps = std::clamp(best_err, 0.0, 1.0);
    if (eps >= 0.5) break;
    const double eps_hat = std::clamp(eps, kEpsilonFloor, 1.0 - kEpsilonFloor);
    best.alpha = 0.5 * std::log((1.0 - eps_hat) / eps_hat);
    model.stumps.push_back(best);
    if (eps <= kEpsilonFloor) break;

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] *= std::exp(-best.alpha * labels[i] * best.Vote(rows[i]));
      total += w[i];
    }
    for (double& wi : w) wi /= total;
  }
  if (model.empty()) {
    throw Error(ErrorCode::kDegenerateFeatures, "no stump beats chance on the training data");
  }
  return model;
}

StumpEnsemble TrainAdaBoost(std::span<const LabeledExample> examples,
                            const AdaBoostOptions& options) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  rows.reserve(examples.size());
  for (const auto& ex : examples) {
    rows.emplace_back(ex.features.values.begin(), ex.features.values.end());
    labels.push_back(ex.label);
  }
  return TrainAdaBoost(rows, labels, options);
}

double TrainingError(const StumpEnsemble& model, const std::vector<std::vector<double>>& rows,
                     const std::vector<int>& labels, std::size_t stumps, double threshold) {
  if (rows.empty()) return 0.0;
  const std::size_t k = std::min(stumps, model.stumps.size());
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double margin = 0.0;
    for (std::size_t s = 0; s < k; ++s) margin += model.stumps[s].alpha * model.stumps[s].Vote(rows[i]);
    const int predicted = margin > threshold ? 1 : -1;
    if (predicted != labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(rows.size());
}

TargetUnit MakeTargetUnit(const AnnotatedText& text, const Span& span, const Assets& assets,
                          TargetProvenance provenance) {
  const TokenRange r = Resolve(text, span);
  TargetUnit unit;
  unit.span = span;
  unit.surface = text.Substr(span);
  unit.lemma = JoinLemmas(text, r);
  unit.pos = PosOf(text, r);
  unit.provenance = provenance;
  unit.sentence = r.sentence;
  unit.features = FeaturesFor(text, span, r, unit.lemma, unit.pos, assets);
  return unit;
}

TargetFeatures ExtractTargetFeatures(const AnnotatedText& text, const Span& span,
                                     const Assets& assets) {
  const TokenRange r = Resolve(text, span);
  return FeaturesFor(text, span, r, JoinLemmas(text, r), PosOf(text, r), assets);
}

std::vector<Span> CandidateTargetSpans(const AnnotatedText& text, const PhraseSet& mwe_lexicon) {
  std::vector<Span> out;
  for (std::size_t s = 0; s < text.sentences.size(); ++s) {
    const auto [first, last] = text.SentenceTokens(s);
    std::size_t i = first;
    while (i < last) {
      std::size_t matched = 0;
      const std::size_t longest = std::min(mwe_lexicon.max_words(), last - i);
      for (std::size_t len = longest; len >= 2; --len) {
        const TokenRange r{i, i + len - 1, s};
        if (mwe_lexicon.Contains(JoinLemmas(text, r)) ||
            mwe_lexicon.Contains(JoinLowerSurfaces(text, r.first, r.last))) {
          matched = len;
          break;
        }
      }
      if (matched > 0) {
        out.push_back({text.tokens[i].span.start, text.tokens[i + matched - 1].span.end});
        i += matched;
        continue;
      }
      if (text.tokens[i].is_alpha) out.push_back(text.tokens[i].span);
      ++i;
    }
  }
  return out;
}

std::vector<TargetUnit> PredictTargets(const AnnotatedText& text, const StumpEnsemble& model,
                                       const Assets& assets, double threshold) {
  if (model.empty()) throw Error(ErrorCode::kModelMissing, "no trained target model");
  std::vector<TargetUnit> out;
  for (const Span& span : CandidateTargetSpans(text, assets.mwe_lexicon)) {
    TargetUnit unit = MakeTargetUnit(text, span, assets, TargetProvenance::kModel);
    unit.margin = model.Margin(unit.features.values);
    if (unit.margin > threshold) out.push_back(std::move(unit));
  }
  return out;
}

std::vector<TargetUnit> SeedTargets(const AnnotatedText& text, const Assets& assets) {
  std::vector<TargetUnit> out;
  for (const Span& span : CandidateTargetSpans(text, assets.mwe_lexicon)) {
    TargetUnit unit = MakeTargetUnit(text, span, assets, TargetProvenance::kSeed);
    if (assets.seed_targets.Contains(unit.lemma) ||
        assets.seed_targets.Contains(unicode::ToLower(unit.surface))) {
      out.push_back(std::move(unit));
    }
  }
  return out;
}

std::vector<LabeledExample> AssembleTrainingSet(const std::vector<UsageEvent>& events,
                                                const DocumentMap& documents,
                                                const Assets& assets, std::uint64_t seed) {
  const auto undone = UndoneSeqs(events);
  std::vector<LabeledExample> out;
  std::map<std::pair<std::string, std::size_t>, std::size_t> positives_per_sentence;
  std::map<std::string, std::vector<Span>> positive_spans;

  for (const auto& e : events) {
    if (e.kind != EventKind::kHighlight && e.kind != EventKind::kReplace) continue;
    if (undone.contains(e.seq)) continue;
    const auto doc = documents.find(e.doc_id);
    if (doc == documents.end()) continue;
    TokenRange r;
    try {
      r = Resolve(doc->second, e.span);
    } catch (const Error&) {
      continue;
    }
    LabeledExample ex;
    ex.features = FeaturesFor(doc->second, e.span, r, JoinLemmas(doc->second, r),
                              PosOf(doc->second, r), assets);
    ex.label = 1;
    ex.source = e.kind == EventKind::kHighlight ? ExampleSource::kUserHighlight
                                                : ExampleSource::kUserReplace;
    ex.doc_id = e.doc_id;
    ex.span = e.span;
    out.push_back(std::move(ex));
    ++positives_per_sentence[{e.doc_id, r.sentence}];
    positive_spans[e.doc_id].push_back(e.span);
  }

  std::mt19937_64 rng(seed);
  for (const auto& [key, positives] : positives_per_sentence) {
    const auto& [doc_id, sentence] = key;
    const AnnotatedText& text = documents.at(doc_id);
    const auto& taken = positive_spans.at(doc_id);
    std::vector<Span> pool;
    const auto [first, last] = text.SentenceTokens(sentence);
    for (std::size_t t = first; t < last; ++t) {
      const Token& tok = text.tokens[t];
      if (!tok.is_alpha) continue;
      const bool overlaps = std::any_of(taken.begin(), taken.end(),
                                        [&](const Span& p) { return p.Overlaps(tok.span); });
      if (!overlaps) pool.push_back(tok.span);
    }
    const std::size_t want = std::min(kNegativesPerPositive * positives, pool.size());
    for (std::size_t i = 0; i < want; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
      std::swap(pool[i], pool[j]);
      LabeledExample ex;
      ex.features = ExtractTargetFeatures(text, pool[i], assets);
      ex.label = -1;
      ex.source = ExampleSource::kNegativeSampled;
      ex.doc_id = doc_id;
      ex.span = pool[i];
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::string SerializeEnsemble(const StumpEnsemble& model) {
  nlohmann::json j;
  j["v"] = 1;
  j["kind"] = "target";
  j["version"] = model.version;
  j["trained_after_iteration"] = model.trained_after_iteration;
  j["feature_order"] = kTargetFeatureNames;
  j["feature_order_hash"] = FeatureOrderHash(kTargetFeatureNames);
  auto& stumps = j["stumps"] = nlohmann::json::array();
  for (const auto& s : model.stumps) {
    stumps.push_back(
        {{"feature", s.feature}, {"threshold", s.threshold}, {"polarity", s.polarity},
         {"alpha", s.alpha}});
  }
  return j.dump();
}

StumpEnsemble ParseEnsemble(std::string_view json) {
  try {
    const auto j = nlohmann::json::parse(json);
    if (j.at("kind").get<std::string>() != "target") {
      throw Error(ErrorCode::kParseError, "not a target model");
    }
    if (j.at("feature_order_hash").get<std::string>() != FeatureOrderHash(kTargetFeatureNames)) {
      throw Error(ErrorCode::kFeatureOrderMismatch,
                  "target model was trained with a different feature order");
    }
    StumpEnsemble model;
    model.version = j.at("version").get<std::string>();
    model.trained_after_iteration = j.at("trained_after_iteration").get<int>();
    for (const auto& s : j.at("stumps")) {
      Stump stump{s.at("feature").get<std::size_t>(), s.at("threshold").get<double>(),
                  s.at("polarity").get<int>(), s.at("alpha").get<double>()};
      if (stump.feature >= kTargetFeatureCount || (stump.polarity != 1 && stump.polarity != -1) ||
          !std::isfinite(stump.alpha) || !std::isfinite(stump.threshold)) {
        throw Error(ErrorCode::kParseError, "invalid stump in target model");
      }
      model.stumps.push_back(stump);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("target model: ") + e.what());
  }
}

}  // namespace adaptpara

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adaptpara/assets.hpp"
#include "adaptpara/events.hpp"
#include "adaptpara/text.hpp"

namespace adaptpara {

inline constexpr std::size_t kTargetFeatureCount = 7;

// Complex-word features of a candidate target span. The order of `values`
// is fixed; kTargetFeatureNames is hashed into serialized models.
struct TargetFeatures {
  enum Index : std::size_t {
    kLengthChars,
    kLengthSyllables,
    kCorpusLogFreq,
    kInMweLexicon,
    kPosIsContent,
    kSentencePosition,
    kCandidateAvailability,
  };
  std::array<double, kTargetFeatureCount> values{};

  double operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const TargetFeatures&, const TargetFeatures&) = default;
};

extern const std::array<std::string_view, kTargetFeatureCount> kTargetFeatureNames;

enum class TargetProvenance { kModel, kUser, kSeed };
std::string_view ProvenanceName(TargetProvenance p);

struct TargetUnit {
  Span span;
  std::string surface;
  std::string lemma;  // token lemmas joined by single spaces
  Pos pos = Pos::kOther;
  TargetProvenance provenance = TargetProvenance::kModel;
  TargetFeatures features;
  double margin = 0.0;
  std::size_t sentence = 0;
};

// A decision stump votes `polarity` when x[feature] > threshold and
// -polarity otherwise.
struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;
  int polarity = 1;
  double alpha = 0.0;

  int Vote(std::span<const double> x) const {
    return x[feature] > threshold ? polarity : -polarity;
  }
  friend bool operator==(const Stump&, const Stump&) = default;
};

struct StumpEnsemble {
  std::vector<Stump> stumps;
  std::string version;
  int trained_after_iteration = 0;

  double Margin(std::span<const double> x) const;
  bool empty() const { return stumps.empty(); }
  friend bool operator==(const StumpEnsemble&, const StumpEnsemble&) = default;
};

enum class ExampleSource { kSeed, kUserHighlight, kUserReplace, kNegativeSampled };

struct LabeledExample {
  TargetFeatures features;
  int label = 1;  // +1 target, -1 non-target
  ExampleSource source = ExampleSource::kSeed;
  std::string doc_id;
  Span span;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct AdaBoostOptions {
  int rounds = 50;
};

// AdaBoost.M1 over axis-aligned stumps. Thresholds are midpoints of sorted
// distinct feature values; alpha = 0.5 * ln((1 - e) / e) with e clamped to
// [1e-10, 1 - 1e-10]. Stops early when the best weighted error reaches 0.5
// or a stump classifies every example correctly.
StumpEnsemble TrainAdaBoost(const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& labels, const AdaBoostOptions& options = {});
StumpEnsemble TrainAdaBoost(std::span<const LabeledExample> examples,
                            const AdaBoostOptions& options = {});

// Fraction of rows whose sign(margin - threshold) disagrees with the label,
// using only the first `stumps` members.
double TrainingError(const StumpEnsemble& model, const std::vector<std::vector<double>>& rows,
                     const std::vector<int>& labels, std::size_t stumps, double threshold = 0.0);

// Throws Error(kSpanMisaligned) unless the span starts and ends on token
// boundaries inside one sentence.
TargetUnit MakeTargetUnit(const AnnotatedText& text, const Span& span, const Assets& assets,
                          TargetProvenance provenance);
TargetFeatures ExtractTargetFeatures(const AnnotatedText& text, const Span& span,
                                     const Assets& assets);

// Spans considered for prediction: longest MWE-lexicon matches (left to
// right, non-overlapping) plus every alpha token not covered by one.
std::vector<Span> CandidateTargetSpans(const AnnotatedText& text, const PhraseSet& mwe_lexicon);

// Candidate spans whose ensemble margin exceeds `threshold`. Throws
// Error(kModelMissing) for an empty model.
std::vector<TargetUnit> PredictTargets(const AnnotatedText& text, const StumpEnsemble& model,
                                       const Assets& assets, double threshold = 0.0);

// Cold-start targets: candidate spans whose lemma is in the seed lexicon.
std::vector<TargetUnit> SeedTargets(const AnnotatedText& text, const Assets& assets);

using DocumentMap = std::map<std::string, AnnotatedText>;

inline constexpr std::size_t kNegativesPerPositive = 3;

// Positives from HIGHLIGHT and REPLACE events (minus undone ones), then up
// to three negatives per positive drawn without replacement from the other
// alpha tokens of the same sentence. Sentences are visited in
// (doc_id, sentence) order with one mt19937_64 seeded by `seed`; pick i
// swaps pool[i] with pool[i + rng() % (pool.size() - i)].
std::vector<LabeledExample> AssembleTrainingSet(const std::vector<UsageEvent>& events,
                                                const DocumentMap& documents,
                                                const Assets& assets, std::uint64_t seed);

std::string SerializeEnsemble(const StumpEnsemble& model);
// Throws Error(kFeatureOrderMismatch) when the stored feature order differs.
StumpEnsemble ParseEnsemble(std::string_view json);

}  // namespace adaptpara

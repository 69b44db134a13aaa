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
#include "adaptpara/resources.hpp"
#include "adaptpara/target_id.hpp"
#include "adaptpara/text.hpp"

namespace adaptpara {

inline constexpr std::size_t kRankFeatureCount = 9;

struct RankFeatures {
  enum Index : std::size_t {
    kResourceScore,
    kLmDelta,
    kCandLogFreq,
    kLenRatio,
    kOriginPpdb,
    kOriginSynlex,
    kOriginDt,
    kOriginEmbed,
    kPriorRankRecip,
  };
  std::array<double, kRankFeatureCount> values{};

  double operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const RankFeatures&, const RankFeatures&) = default;
  friend auto operator<=>(const RankFeatures&, const RankFeatures&) = default;
};

extern const std::array<std::string_view, kRankFeatureCount> kRankFeatureNames;

// Linear scorer. An empty trained_on_iterations list marks the LM baseline,
// which has no usable weights.
struct RankingModel {
  std::array<double, kRankFeatureCount> weights{};
  std::vector<int> trained_on_iterations;
  std::string version;

  bool is_baseline() const { return trained_on_iterations.empty(); }
  double Score(const RankFeatures& f) const;
  friend bool operator==(const RankingModel&, const RankingModel&) = default;
};

struct RankedCandidate {
  std::string text;
  double score = 0.0;  // LM log10 prob (baseline) or model score
  double resource_score = 0.0;
  OriginSet origins;
  RankFeatures features;
};

// log10 P of the target's sentence with `span` replaced by `replacement`.
double SubstitutedLogProb(const AnnotatedText& text, const Span& span,
                          std::string_view replacement, const NgramLanguageModel& lm);

// Features of `candidate` for `target`. Candidates missing from `cands`
// (e.g. a displayed list from older resources) get zero resource score,
// no origins and zero prior rank. Without an LM the LM delta is 0.
RankFeatures ExtractRankFeatures(const TargetUnit& target, const CandidateSet& cands,
                                 std::string_view candidate, const AnnotatedText& text,
                                 const Assets& assets);

// Orders by in-context LM log-prob, then resource score, then text.
std::vector<RankedCandidate> BaselineRank(const TargetUnit& target, const CandidateSet& cands,
                                          const AnnotatedText& text, const Assets& assets);

// Orders by model score, then resource score, then text.
std::vector<RankedCandidate> Rank(const TargetUnit& target, const CandidateSet& cands,
                                  const RankingModel& model, const AnnotatedText& text,
                                  const Assets& assets);

struct PreferencePair {
  RankFeatures winner;
  RankFeatures loser;
  double weight = 1.0;
  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

// Each live REPLACE: the selected candidate beats every other displayed
// candidate with weight 1. Undone events contribute nothing, identical
// (winner, loser) pairs are merged by summing weights, and pairs whose two
// sides have equal features are dropped. Order is first appearance.
std::vector<PreferencePair> PairsFromEvents(const std::vector<UsageEvent>& events,
                                            const DocumentMap& documents, const Assets& assets);

struct RankerOptions {
  int epochs = 100;
  double lr = 0.1;
  double l2 = 0.001;
  std::uint64_t seed = 42;
};

// Full-batch gradient descent from zero on
//   sum w log(1 + exp(-theta . d)) + l2/2 |theta|^2,  d = winner - loser.
// Throws Error(kNoPairs) when nothing carries weight.
RankingModel TrainRanker(std::span<const PreferencePair> pairs, const RankerOptions& options = {});

// Mean weighted pairwise logistic loss of `weights` (without the l2 term).
double PairwiseLoss(std::span<const PreferencePair> pairs,
                    const std::array<double, kRankFeatureCount>& weights);

struct NdcgResult {
  double value = 0.0;
  bool all_zero_gold = false;
};

// Gain 2^g - 1, discount log2(i + 1) for 1-based rank i. The ideal DCG
// sorts every gold grade. Candidates missing from `gold` have grade 0.
NdcgResult NdcgAtK(const std::vector<std::string>& predicted,
                   const std::map<std::string, int>& gold, std::size_t k = 10);

std::string SerializeRankingModel(const RankingModel& model);
// Throws Error(kFeatureOrderMismatch) when the stored feature order differs.
RankingModel ParseRankingModel(std::string_view json);

}  // namespace adaptpara

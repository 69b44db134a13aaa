#include "adaptpara/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "adaptpara/checksum.hpp"
#include "adaptpara/error.hpp"
#include "adaptpara/unicode.hpp"
#include "json.hpp"

namespace adaptpara {

const std::array<std::string_view, kRankFeatureCount> kRankFeatureNames = {
    "resource_score", "in_context_lm_delta", "cand_corpus_log_freq",
    "len_ratio",      "origin_ppdb",         "origin_synlex",
    "origin_dt",      "origin_embed",        "prior_rank_recip"};

namespace {

std::vector<std::string> SubstitutedSentence(const AnnotatedText& text, const Span& span,
                                             std::string_view replacement) {
  const auto first = text.TokenStartingAt(span.start);
  const auto last = text.TokenEndingAt(span.end);
  if (!first || !last || *last < *first) {
    throw Error(ErrorCode::kSpanMisaligned, "span does not align to tokens");
  }
  const auto [s_first, s_last] = text.SentenceTokens(text.token_sentence[*first]);
  std::vector<std::string> out;
  for (std::size_t i = s_first; i < *first; ++i) out.push_back(text.tokens[i].surface);
  for (auto& t : TokenizeSurfaces(replacement)) out.push_back(std::move(t));
  for (std::size_t i = *last + 1; i < s_last; ++i) out.push_back(text.tokens[i].surface);
  return out;
}

void SortAndCap(std::vector<RankedCandidate>& list, std::size_t cap) {
  std::sort(list.begin(), list.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.resource_score != b.resource_score) return a.resource_score > b.resource_score;
    return a.text < b.text;
  });
  if (cap > 0 && list.size() > cap) list.resize(cap);
}

RankedCandidate MakeRanked(const Candidate& c, const TargetUnit& target, const CandidateSet& cands,
                           const AnnotatedText& text, const Assets& assets) {
  RankedCandidate r;
  r.text = c.text;
  r.resource_score = c.best_score;
  r.origins = c.origins;
  r.features = ExtractRankFeatures(target, cands, c.text, text, assets);
  return r;
}

double Sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// log(1 + exp(-z)) without overflow.
double Softplus(double z) { return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

double Dot(const std::array<double, kRankFeatureCount>& a, const std::array<double, kRankFeatureCount>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kRankFeatureCount; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double RankingModel::Score(const RankFeatures& f) const { return Dot(weights, f.values); }

double SubstitutedLogProb(const AnnotatedText& text, const Span& span,
                          std::string_view replacement, const NgramLanguageModel& lm) {
  return lm.LogProb(SubstitutedSentence(text, span, replacement));
}

RankFeatures ExtractRankFeatures(const TargetUnit& target, const CandidateSet& cands,
                                 std::string_view candidate, const AnnotatedText& text,
                                 const Assets& assets) {
  RankFeatures f;
  const Candidate* found = nullptr;
  std::size_t position = 0;
  for (; position < cands.candidates.size(); ++position) {
    if (cands.candidates[position].text == candidate) {
      found = &cands.candidates[position];
      break;
    }
  }
  if (found != nullptr) {
    f.values[RankFeatures::kResourceScore] = found->best_score;
    f.values[RankFeatures::kOriginPpdb] = found->origins.Has(Origin::kPpdb) ? 1.0 : 0.0;
    f.values[RankFeatures::kOriginSynlex] = found->origins.Has(Origin::kSynlex) ? 1.0 : 0.0;
    f.values[RankFeatures::kOriginDt] = found->origins.Has(Origin::kDt) ? 1.0 : 0.0;
    f.values[RankFeatures::kOriginEmbed] = found->origins.Has(Origin::kEmbed) ? 1.0 : 0.0;
    f.values[RankFeatures::kPriorRankRecip] = 1.0 / (1.0 + static_cast<double>(position));
  }
  if (assets.lm) {
    f.values[RankFeatures::kLmDelta] =
        SubstitutedLogProb(text, target.span, candidate, *assets.lm) -
        SubstitutedLogProb(text, target.span, text.Substr(target.span), *assets.lm);
  }
  f.values[RankFeatures::kCandLogFreq] = assets.frequencies.LogFrequency(unicode::ToLower(candidate));
  const double target_len = static_cast<double>(target.span.length());
  f.values[RankFeatures::kLenRatio] =
      target_len > 0 ? static_cast<double>(unicode::Length(candidate)) / target_len : 0.0;
  return f;
}

std::vector<RankedCandidate> BaselineRank(const TargetUnit& target, const CandidateSet& cands,
                                          const AnnotatedText& text, const Assets& assets) {
  std::vector<RankedCandidate> out;
  out.reserve(cands.candidates.size());
  for (const auto& c : cands.candidates) {
    RankedCandidate r = MakeRanked(c, target, cands, text, assets);
    r.score = assets.lm ? SubstitutedLogProb(text, target.span, c.text, *assets.lm) : 0.0;
    out.push_back(std::move(r));
  }
  SortAndCap(out, assets.display_cap);
  return out;
}

std::vector<RankedCandidate> Rank(const TargetUnit& target, const CandidateSet& cands,
                                  const RankingModel& model, const AnnotatedText& text,
                                  const Assets& assets) {
  if (model.is_baseline()) return BaselineRank(target, cands, text, assets);
  std::vector<RankedCandidate> out;
  out.reserve(cands.candidates.size());
  for (const auto& c : cands.candidates) {
    RankedCandidate r = MakeRanked(c, target, cands, text, assets);
    r.score = model.Score(r.features);
    out.push_back(std::move(r));
  }
  SortAndCap(out, assets.display_cap);
  return out;
}

std::vector<PreferencePair> PairsFromEvents(const std::vector<UsageEvent>& events,
                                            const DocumentMap& documents, const Assets& assets) {
  const auto undone = UndoneSeqs(events);
  std::vector<PreferencePair> out;
  std::map<std::pair<RankFeatures, RankFeatures>, std::size_t> index;
  for (const auto& e : events) {
    if (e.kind != EventKind::kReplace || !e.selected_candidate) continue;
    if (undone.contains(e.seq)) continue;
    const auto doc = documents.find(e.doc_id);
    if (doc == documents.end()) continue;
    TargetUnit target;
    try {
      target = MakeTargetUnit(doc->second, e.span, assets, TargetProvenance::kUser);
    } catch (const Error&) {
      continue;
    }
    const CandidateSet cands = CandidatesFor(target.lemma, target.pos, assets.providers, assets.k_embed);
    const RankFeatures winner =
        ExtractRankFeatures(target, cands, *e.selected_candidate, doc->second, assets);
    for (const auto& other : e.displayed_candidates) {
      if (other == *e.selected_candidate) continue;
      const RankFeatures loser = ExtractRankFeatures(target, cands, other, doc->second, assets);
      if (winner == loser) continue;
      const auto [it, inserted] = index.try_emplace({winner, loser}, out.size());
      if (inserted) {
        out.push_back({winner, loser, 1.0});
      } else {
        out[it->second].weight += 1.0;
      }
    }
  }
  return out;
}

double PairwiseLoss(std::span<const PreferencePair> pairs,
                    const std::array<double, kRankFeatureCount>& weights) {
  double total = 0.0;
  double loss = 0.0;
  for (const auto& p : pairs) {
    double margin = 0.0;
    for (std::size_t i = 0; i < kRankFeatureCount; ++i) {
      margin += weights[i] * (p.winner.values[i] - p.loser.values[i]);
    }
    loss += p.weight * Softplus(margin);
    total += p.weight;
  }
  return total > 0 ? loss / total : 0.0;
}

RankingModel TrainRanker(std::span<const PreferencePair> pairs, const RankerOptions& options) {
  double total = 0.0;
  for (const auto& p : pairs) {
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) {
      throw Error(ErrorCode::kNoPairs, "pair weights must be finite and non-negative");
    }
    total += p.weight;
  }
  if (pairs.empty() || total <= 0.0) throw Error(ErrorCode::kNoPairs, "no preference pairs");

  // Differences in a seeded order; only the summation order depends on it.
  std::vector<std::array<double, kRankFeatureCount>> diffs;
  std::vector<double> weights;
  diffs.reserve(pairs.size());
  for (const auto& p : pairs) {
    std::array<double, kRankFeatureCount> d{};
    for (std::size_t i = 0; i < kRankFeatureCount; ++i) d[i] = p.winner.values[i] - p.loser.values[i];
    diffs.push_back(d);
    weights.push_back(p.weight);
  }
  std::mt19937_64 rng(options.seed);
  for (std::size_t i = diffs.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(diffs[i - 1], diffs[j]);
    std::swap(weights[i - 1], weights[j]);
  }

  std::array<double, kRankFeatureCount> theta{};
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::array<double, kRankFeatureCount> grad{};
    for (std::size_t k = 0; k < diffs.size(); ++k) {
      // d/dtheta log(1 + exp(-theta.d)) = -sigmoid(-theta.d) d
      const double g = -weights[k] * Sigmoid(-Dot(theta, diffs[k]));
      for (std::size_t i = 0; i < kRankFeatureCount; ++i) grad[i] += g * diffs[k][i];
    }
    for (std::size_t i = 0; i < kRankFeatureCount; ++i) {
      theta[i] -= options.lr * (grad[i] + options.l2 * theta[i]);
    }
  }
  RankingModel model;
  model.weights = theta;
  model.trained_on_iterations = {0};  // ad hoc; the adapt loop replaces this
  return model;
}

NdcgResult NdcgAtK(const std::vector<std::string>& predicted,
                   const std::map<std::string, int>& gold, std::size_t k) {
  auto gain = [](int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; };
  std::vector<int> ideal;
  for (const auto& [_, g] : gold) ideal.push_back(std::max(g, 0));
  std::sort(ideal.rbegin(), ideal.rend());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
    idcg += gain(ideal[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  if (idcg <= 0.0) return {0.0, true};
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, predicted.size()); ++i) {
    const auto it = gold.find(predicted[i]);
    if (it == gold.end()) continue;
    dcg += gain(std::max(it->second, 0)) / std::log2(static_cast<double>(i) + 2.0);
  }
  return {std::clamp(dcg / idcg, 0.0, 1.0), false};
}

std::string SerializeRankingModel(const RankingModel& model) {
  nlohmann::json j;
  j["v"] = 1;
  j["kind"] = "ranker";
  j["version"] = model.version;
  j["trained_on_iterations"] = model.trained_on_iterations;
  j["feature_order"] = kRankFeatureNames;
  j["feature_order_hash"] = FeatureOrderHash(kRankFeatureNames);
  j["weights"] = model.weights;
  return j.dump();
}

RankingModel ParseRankingModel(std::string_view json) {
  try {
    const auto j = nlohmann::json::parse(json);
    if (j.at("kind").get<std::string>() != "ranker") {
      throw Error(ErrorCode::kParseError, "not a ranking model");
    }
    if (j.at("feature_order_hash").get<std::string>() != FeatureOrderHash(kRankFeatureNames)) {
      throw Error(ErrorCode::kFeatureOrderMismatch,
                  "ranking model was trained with a different feature order");
    }
    RankingModel model;
    model.version = j.at("version").get<std::string>();
    model.trained_on_iterations = j.at("trained_on_iterations").get<std::vector<int>>();
    const auto w = j.at("weights").get<std::vector<double>>();
    if (w.size() != kRankFeatureCount) {
      throw Error(ErrorCode::kDimensionMismatch, "ranking model has the wrong weight count");
    }
    for (std::size_t i = 0; i < kRankFeatureCount; ++i) {
      if (!std::isfinite(w[i])) throw Error(ErrorCode::kParseError, "non-finite ranker weight");
      model.weights[i] = w[i];
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("ranking model: ") + e.what());
  }
}

}  // namespace adaptpara

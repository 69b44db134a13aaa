#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "adaptpara/api.hpp"
#include "adaptpara/assets.hpp"
#include "adaptpara/ranker.hpp"
#include "json.hpp"

namespace adaptpara {

// A synthetic user with a private linear preference over RankFeatures.
struct OracleUser {
  std::array<double, kRankFeatureCount> true_weights{};
  double noise_temp = 0.0;                // 0: argmax
  std::set<std::string> highlight_policy;  // lemmas always treated as targets
  std::uint64_t seed = 0;

  // Throws Error(kConfigError) for non-finite weights or negative temperature.
  void Validate() const;
  double Utility(const RankFeatures& f) const;
};

// Index into `displayed`. Softmax over utility / noise_temp, argmax (first
// best on ties) when noise_temp == 0. `rng` advances only when sampling.
std::size_t ChooseCandidate(const OracleUser& oracle, const std::vector<RankFeatures>& displayed,
                            std::uint64_t& rng_state);

// Grades induced from an oracle's utility ordering: best 3, next two 2,
// next three 1, the rest 0. Ties by text.
std::map<std::string, int> InducedGrades(const std::vector<std::string>& candidates,
                                         const std::vector<double>& utilities);

struct GoldKey {
  std::string sentence;
  Span span;
  friend auto operator<=>(const GoldKey& a, const GoldKey& b) {
    if (auto c = a.sentence <=> b.sentence; c != 0) return c;
    if (auto c = a.span.start <=> b.span.start; c != 0) return c;
    return a.span.end <=> b.span.end;
  }
  friend bool operator==(const GoldKey&, const GoldKey&) = default;
};

// sentence<TAB>start<TAB>end<TAB>cand:grade,cand:grade,...
using GoldFile = std::map<GoldKey, std::map<std::string, int>>;
// sentence<TAB>start<TAB>end<TAB>cand,cand,...   (served order)
using RankingDump = std::vector<std::pair<GoldKey, std::vector<std::string>>>;

// Both throw Error(kParseError) naming the line; gold entries need at least
// one positive grade.
GoldFile ParseGoldFile(std::istream& in);
GoldFile LoadGoldFile(const std::filesystem::path& path);
void WriteGoldFile(std::ostream& out, const GoldFile& gold);
RankingDump ParseRankingDump(std::istream& in);
RankingDump LoadRankingDump(const std::filesystem::path& path);
void WriteRankingDump(std::ostream& out, const RankingDump& dump);

struct NdcgReport {
  std::vector<std::pair<GoldKey, double>> per_target;
  std::vector<GoldKey> excluded;  // not in gold
  double mean = 0.0;
};
// Throws Error(kEmptyDump) for an empty dump and Error(kParseError) when no
// target of the dump is in the gold file.
NdcgReport EvalNdcg(const RankingDump& dump, const GoldFile& gold, std::size_t k = 10);

// How the harness reaches the service: in-process or over HTTP.
using Transport = std::function<HttpResponse(const HttpRequest&)>;
Transport InProcessTransport(Service& service);
// Throws Error(kServiceUnreachable) from the returned transport when the
// server does not answer.
Transport HttpTransport(const std::string& base_url);

struct SimConfig {
  int iterations = 9;
  std::vector<std::string> sentences;  // the fixed sentence set, reused every iteration
  std::size_t sentences_per_iteration = 50;
  std::vector<OracleUser> oracles;
  std::string admin_token;
  std::size_t k = 10;
  // Externally supplied gold; empty means "induce from the first oracle".
  GoldFile gold;
  bool external_gold = false;
};

struct SimIterationResult {
  int iteration = 0;
  double ndcg = 0.0;
  std::size_t targets = 0;
  std::size_t excluded = 0;  // GoldMissingTarget
  std::size_t replaces = 0;
  std::size_t highlights = 0;
  std::size_t rejects = 0;
  ModelVersionPair served_versions;  // models that served this iteration
  nlohmann::ordered_json retrain;    // /admin/retrain response after the iteration
  RankingDump served;
};

struct SimResult {
  std::vector<SimIterationResult> iterations;
  GoldFile gold;  // the gold used (induced entries included)
  std::vector<std::string> failures;  // invariant checks that did not hold
};

// Drives the loop: each iteration every oracle submits every sentence
// (AUTO_HIGHLIGHT), highlights policy lemmas that were not offered
// (CANDIDATES_FOR_SPAN), replaces or rejects each offered target, then the
// iteration is force-closed and retrained through /admin/retrain.
SimResult Simulate(const SimConfig& config, const Assets& assets, const Transport& transport);

// "iteration,ndcg" with six decimals.
std::string CurveCsv(const SimResult& result);

// Default oracle preference used by the harness and the demo data.
std::array<double, kRankFeatureCount> DefaultOracleWeights();

// Reads `sentences` one per line; blank lines skipped.
std::vector<std::string> LoadSentences(const std::filesystem::path& path);
// Highlight policy: one lemma per line, '_' joins phrase words.
std::set<std::string> LoadPolicy(const std::filesystem::path& path);

struct ReplayCheck {
  bool identical = false;
  std::string live;      // state recorded by the run
  std::string replayed;  // state rebuilt from the log
};
// Rebuilds the adapt loop from <data_dir>/events.jsonl and documents.jsonl
// with fresh in-memory models and compares its state dump with `expected`.
ReplayCheck CheckReplay(const Config& config, const Assets& assets,
                        const std::filesystem::path& data_dir, const std::string& expected);

}  // namespace adaptpara

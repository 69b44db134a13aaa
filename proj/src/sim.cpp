#include "adaptpara/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "adaptpara/error.hpp"
#include "adaptpara/target_id.hpp"
#include "httplib.h"
#include "io_util.hpp"

namespace adaptpara {

namespace {

using Json = nlohmann::ordered_json;

std::uint64_t SplitMix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Uniform01(std::uint64_t& state) {
  return static_cast<double>(SplitMix64(state) >> 11) * 0x1.0p-53;
}

[[noreturn]] void BadLine(const std::string& what, std::size_t line) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> SplitOn(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::size_t ParseOffset(const std::string& s, std::size_t line) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    BadLine("bad offset '" + s + "'", line);
  }
  return std::stoull(s);
}

// Shared prefix of gold and dump lines: sentence, start, end, rest.
std::pair<GoldKey, std::string> ParseKeyed(const std::string& raw, std::size_t line) {
  const auto cols = SplitOn(raw, '\t');
  if (cols.size() != 4) BadLine("expected 4 tab-separated columns", line);
  GoldKey key{cols[0], {ParseOffset(cols[1], line), ParseOffset(cols[2], line)}};
  if (key.span.end <= key.span.start) BadLine("empty span", line);
  return {key, cols[3]};
}

template <typename Fn>
void ForEachDataLine(std::istream& in, Fn fn) {
  std::size_t number = 0;
  for (std::string line; std::getline(in, line);) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fn(line, number);
  }
}

std::ifstream OpenOrThrow(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  return in;
}

}  // namespace

void OracleUser::Validate() const {
  for (double w : true_weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::kConfigError, "oracle weights must be finite");
  }
  if (!(noise_temp >= 0.0)) throw Error(ErrorCode::kConfigError, "noise_temp must be >= 0");
}

double OracleUser::Utility(const RankFeatures& f) const {
  double u = 0.0;
  for (std::size_t i = 0; i < kRankFeatureCount; ++i) u += true_weights[i] * f.values[i];
  return u;
}

std::size_t ChooseCandidate(const OracleUser& oracle, const std::vector<RankFeatures>& displayed,
                            std::uint64_t& rng_state) {
  if (displayed.empty()) throw Error(ErrorCode::kInvalidEvent, "nothing displayed to choose from");
  std::vector<double> u;
  for (const auto& f : displayed) u.push_back(oracle.Utility(f));
  const std::size_t best =
      static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());
  if (oracle.noise_temp == 0.0) return best;
  std::vector<double> p(u.size());
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    p[i] = std::exp((u[i] - u[best]) / oracle.noise_temp);
    total += p[i];
  }
  double x = Uniform01(rng_state) * total;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (x < p[i]) return i;
    x -= p[i];
  }
  return p.size() - 1;
}

std::map<std::string, int> InducedGrades(const std::vector<std::string>& candidates,
                                         const std::vector<double>& utilities) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (utilities[a] != utilities[b]) return utilities[a] > utilities[b];
    return candidates[a] < candidates[b];
  });
  std::map<std::string, int> grades;
  for (std::size_t r = 0; r < order.size(); ++r) {
    grades[candidates[order[r]]] = r == 0 ? 3 : r < 3 ? 2 : r < 6 ? 1 : 0;
  }
  return grades;
}

GoldFile ParseGoldFile(std::istream& in) {
  GoldFile gold;
  ForEachDataLine(in, [&](const std::string& raw, std::size_t line) {
    auto [key, rest] = ParseKeyed(raw, line);
    std::map<std::string, int> grades;
    bool positive = false;
    for (const auto& item : SplitOn(rest, ',')) {
      const auto colon = item.rfind(':');
      if (colon == std::string::npos || colon == 0) BadLine("expected cand:grade", line);
      const std::string g = item.substr(colon + 1);
      if (g.size() != 1 || g[0] < '0' || g[0] > '3') BadLine("grade must be 0..3", line);
      if (!grades.emplace(item.substr(0, colon), g[0] - '0').second) {
        BadLine("duplicate candidate", line);
      }
      positive = positive || g[0] != '0';
    }
    if (!positive) BadLine("no candidate with grade > 0", line);
    if (!gold.emplace(key, std::move(grades)).second) BadLine("duplicate target", line);
  });
  return gold;
}

GoldFile LoadGoldFile(const std::filesystem::path& path) {
  auto in = OpenOrThrow(path);
  try {
    return ParseGoldFile(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + " " + e.what());
  }
}

void WriteGoldFile(std::ostream& out, const GoldFile& gold) {
  for (const auto& [key, grades] : gold) {
    out << key.sentence << '\t' << key.span.start << '\t' << key.span.end << '\t';
    bool first = true;
    for (const auto& [cand, grade] : grades) {
      out << (first ? "" : ",") << cand << ':' << grade;
      first = false;
    }
    out << '\n';
  }
}

RankingDump ParseRankingDump(std::istream& in) {
  RankingDump dump;
  ForEachDataLine(in, [&](const std::string& raw, std::size_t line) {
    auto [key, rest] = ParseKeyed(raw, line);
    auto cands = SplitOn(rest, ',');
    if (std::any_of(cands.begin(), cands.end(), [](const auto& c) { return c.empty(); })) {
      BadLine("empty candidate", line);
    }
    dump.emplace_back(std::move(key), std::move(cands));
  });
  return dump;
}

RankingDump LoadRankingDump(const std::filesystem::path& path) {
  auto in = OpenOrThrow(path);
  try {
    return ParseRankingDump(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + " " + e.what());
  }
}

void WriteRankingDump(std::ostream& out, const RankingDump& dump) {
  for (const auto& [key, cands] : dump) {
    out << key.sentence << '\t' << key.span.start << '\t' << key.span.end << '\t';
    for (std::size_t i = 0; i < cands.size(); ++i) out << (i ? "," : "") << cands[i];
    out << '\n';
  }
}

NdcgReport EvalNdcg(const RankingDump& dump, const GoldFile& gold, std::size_t k) {
  if (dump.empty()) throw Error(ErrorCode::kEmptyDump, "ranking dump has no entries");
  NdcgReport report;
  double sum = 0.0;
  for (const auto& [key, cands] : dump) {
    const auto it = gold.find(key);
    if (it == gold.end()) {
      report.excluded.push_back(key);
      continue;
    }
    const double v = NdcgAtK(cands, it->second, k).value;
    report.per_target.emplace_back(key, v);
    sum += v;
  }
  if (report.per_target.empty()) {
    throw Error(ErrorCode::kParseError, "no dump entry matches the gold file");
  }
  report.mean = sum / static_cast<double>(report.per_target.size());
  return report;
}

Transport InProcessTransport(Service& service) {
  return [&service](const HttpRequest& r) { return service.Handle(r); };
}

Transport HttpTransport(const std::string& base_url) {
  auto client = std::make_shared<httplib::Client>(base_url);
  client->set_connection_timeout(5);
  client->set_read_timeout(300);
  return [client, base_url](const HttpRequest& r) {
    httplib::Headers headers;
    for (const auto& [k, v] : r.headers) headers.emplace(k, v);
    httplib::Result res = r.method == "GET"
                              ? client->Get(r.path, headers)
                              : client->Post(r.path, headers, r.body, "application/json");
    if (!res) {
      throw Error(ErrorCode::kServiceUnreachable,
                  base_url + r.path + ": " + httplib::to_string(res.error()));
    }
    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    return out;
  };
}

namespace {

struct Harness {
  const SimConfig& config;
  const Assets& assets;
  const Transport& transport;
  SimResult result;

  Json Call(const std::string& method, const std::string& path, const Json& body,
            int* status = nullptr, std::map<std::string, std::string> headers = {}) {
    HttpRequest req{method, path, body.is_null() ? "" : body.dump(), std::move(headers)};
    const HttpResponse res = transport(req);
    if (status) *status = res.status;
    Json j = Json::parse(res.body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kParseError, path + " returned non-JSON");
    if (!status && res.status != 200) {
      throw Error(ErrorCode::kServiceUnreachable,
                  path + " answered " + std::to_string(res.status) + ": " + res.body);
    }
    return j;
  }

  void Feedback(const Json& body) {
    int status = 0;
    const Json r = Call("POST", "/feedback", body, &status);
    if (status != 200) {
      result.failures.push_back("feedback rejected (" + std::to_string(status) + "): " + r.dump());
    }
  }

  // Scores the served list, then lets the oracle act on it.
  void Serve(SimIterationResult& it, const OracleUser& oracle, std::uint64_t& rng,
             const std::string& session, const std::string& request_id, const Json& target,
             const AnnotatedText& text, const std::string& sentence, bool wanted,
             double& ndcg_sum) {
    const Span span{target["span"][0].get<std::size_t>(), target["span"][1].get<std::size_t>()};
    std::vector<std::string> displayed;
    for (const auto& c : target["candidates"]) displayed.push_back(c["text"]);
    if (displayed.empty()) return;

    const TargetUnit unit = MakeTargetUnit(text, span, assets, TargetProvenance::kModel);
    const CandidateSet cands =
        CandidatesFor(unit.lemma, unit.pos, assets.providers, assets.k_embed);
    const GoldKey key{sentence, span};
    if (!config.external_gold && !result.gold.contains(key)) {
      std::vector<std::string> names;
      std::vector<double> utilities;
      for (const auto& c : cands.candidates) {
        names.push_back(c.text);
        utilities.push_back(config.oracles.front().Utility(
            ExtractRankFeatures(unit, cands, c.text, text, assets)));
      }
      result.gold[key] = InducedGrades(names, utilities);
    }
    if (const auto g = result.gold.find(key); g != result.gold.end()) {
      ndcg_sum += NdcgAtK(displayed, g->second, config.k).value;
      ++it.targets;
      it.served.emplace_back(key, displayed);
    } else {
      ++it.excluded;
    }

    Json fb{{"v", 1},
            {"session_id", session},
            {"request_id", request_id},
            {"span", Json::array({span.start, span.end})}};
    wanted = wanted || oracle.highlight_policy.contains(unit.lemma);
    if (!wanted) {
      fb["kind"] = "REJECT";
      ++it.rejects;
      Feedback(fb);
      return;
    }
    std::vector<RankFeatures> features;
    for (const auto& d : displayed) {
      features.push_back(ExtractRankFeatures(unit, cands, d, text, assets));
    }
    fb["kind"] = "REPLACE";
    fb["selected_candidate"] = displayed[ChooseCandidate(oracle, features, rng)];
    ++it.replaces;
    Feedback(fb);
  }

  void Run() {
    if (config.oracles.empty()) throw Error(ErrorCode::kConfigError, "no oracle users");
    if (config.sentences.empty()) throw Error(ErrorCode::kConfigError, "no sentences");
    for (const auto& o : config.oracles) o.Validate();
    if (config.external_gold) result.gold = config.gold;
    const std::size_t n_sent = std::min(config.sentences_per_iteration, config.sentences.size());

    std::vector<std::uint64_t> rng;
    for (const auto& o : config.oracles) rng.push_back(o.seed);

    for (int iteration = 1; iteration <= config.iterations; ++iteration) {
      SimIterationResult it;
      it.iteration = iteration;
      double ndcg_sum = 0.0;
      std::set<std::pair<std::string, std::string>> versions_seen;
      for (std::size_t o = 0; o < config.oracles.size(); ++o) {
        const OracleUser& oracle = config.oracles[o];
        const std::string session = "oracle-" + std::to_string(o + 1);
        for (std::size_t s = 0; s < n_sent; ++s) {
          const std::string& sentence = config.sentences[s];
          const std::string doc_id = "sim-" + std::to_string(s + 1);
          const Json resp = Call("POST", "/paraphrase",
                                 Json{{"v", 1},
                                      {"doc_id", doc_id},
                                      {"session_id", session},
                                      {"mode", "AUTO_HIGHLIGHT"},
                                      {"text", sentence}});
          versions_seen.emplace(resp["model_versions"]["target"], resp["model_versions"]["ranker"]);
          const AnnotatedText text = assets.SegmentText(sentence, doc_id);
          std::vector<Span> offered;
          for (const auto& t : resp["targets"]) {
            offered.push_back({t["span"][0].get<std::size_t>(), t["span"][1].get<std::size_t>()});
            Serve(it, oracle, rng[o], session, resp["request_id"], t, text, sentence, false,
                  ndcg_sum);
          }
          // policy lemmas the model did not offer are highlighted by hand
          for (const Span& span : CandidateTargetSpans(text, assets.mwe_lexicon)) {
            if (std::any_of(offered.begin(), offered.end(),
                            [&](const Span& x) { return x.Overlaps(span); })) {
              continue;
            }
            const auto unit = MakeTargetUnit(text, span, assets, TargetProvenance::kUser);
            if (!oracle.highlight_policy.contains(unit.lemma)) continue;
            const Json manual = Call("POST", "/paraphrase",
                                     Json{{"v", 1},
                                          {"doc_id", doc_id},
                                          {"session_id", session},
                                          {"mode", "CANDIDATES_FOR_SPAN"},
                                          {"span", Json::array({span.start, span.end})},
                                          {"text", sentence}});
            ++it.highlights;
            Serve(it, oracle, rng[o], session, manual["request_id"], manual["targets"][0], text,
                  sentence, true, ndcg_sum);
          }
        }
      }
      it.ndcg = it.targets ? ndcg_sum / static_cast<double>(it.targets) : 0.0;
      if (!versions_seen.empty()) {
        it.served_versions = {versions_seen.begin()->first, versions_seen.begin()->second};
      }
      if (versions_seen.size() > 1) {
        result.failures.push_back("iteration " + std::to_string(iteration) +
                                  " was served by more than one model pair");
      }
      if (iteration == 1 && it.served_versions.ranker != kBaselineRankerMarker) {
        result.failures.push_back("iteration 1 was served by a trained ranker");
      }
      int status = 0;
      it.retrain = Call("POST", "/admin/retrain", Json(), &status,
                        {{"x-admin-token", config.admin_token}});
      if (status != 200) {
        result.failures.push_back("retrain after iteration " + std::to_string(iteration) +
                                  " failed: " + it.retrain.dump());
      }
      result.iterations.push_back(std::move(it));
    }
  }
};

}  // namespace

SimResult Simulate(const SimConfig& config, const Assets& assets, const Transport& transport) {
  Harness h{config, assets, transport, {}};
  h.Run();
  return std::move(h.result);
}

std::string CurveCsv(const SimResult& result) {
  std::string out = "iteration,ndcg\n";
  char buf[64];
  for (const auto& it : result.iterations) {
    std::snprintf(buf, sizeof buf, "%d,%.6f\n", it.iteration, it.ndcg);
    out += buf;
  }
  return out;
}

std::array<double, kRankFeatureCount> DefaultOracleWeights() {
  // A reader who wants plain words: frequent, short, natural in context, and
  // wary of suggestions that only an embedding neighbourhood vouches for.
  std::array<double, kRankFeatureCount> w{};
  w[RankFeatures::kResourceScore] = 0.5;
  w[RankFeatures::kLmDelta] = 0.25;
  w[RankFeatures::kCandLogFreq] = 1.0;
  w[RankFeatures::kLenRatio] = -0.75;
  w[RankFeatures::kOriginPpdb] = 0.5;
  w[RankFeatures::kOriginSynlex] = 0.5;
  w[RankFeatures::kOriginDt] = 0.25;
  w[RankFeatures::kOriginEmbed] = -1.0;
  return w;
}

std::vector<std::string> LoadSentences(const std::filesystem::path& path) {
  auto in = OpenOrThrow(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::set<std::string> LoadPolicy(const std::filesystem::path& path) {
  std::set<std::string> out;
  for (const auto& line : LoadSentences(path)) {
    if (line[0] == '#') continue;
    if (auto key = detail::NormalizePhrase(line); !key.empty()) out.insert(std::move(key));
  }
  return out;
}

ReplayCheck CheckReplay(const Config& config, const Assets& assets,
                        const std::filesystem::path& data_dir, const std::string& expected) {
  EventLog log(data_dir / "events.jsonl");
  DocumentStore docs(data_dir / "documents.jsonl");
  ModelRepository models;
  LoopOptions options = LoopOptionsFrom(config);
  options.async = false;
  AdaptLoop loop(assets, log, docs, models, options);
  log.Close();
  docs.Close();

  ReplayCheck check;
  nlohmann::ordered_json live = nlohmann::ordered_json::parse(expected);
  live.erase("v");
  check.live = live.dump();
  check.replayed = loop.StateJson().dump();
  check.identical = check.live == check.replayed;
  return check;
}

}  // namespace adaptpara

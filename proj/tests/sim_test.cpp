#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adaptpara/api.hpp"
#include "adaptpara/error.hpp"
#include "adaptpara/sim.hpp"
#include "adaptpara/target_id.hpp"
#include "doctest.h"

using namespace adaptpara;
namespace fs = std::filesystem;

namespace {

const std::string kFix = ADAPTPARA_FIXTURES;
const std::string kDemo = ADAPTPARA_DEMO_DIR;
const std::string kCli = ADAPTPARA_SIM_CLI;

template <typename Fn>
void CheckError(Fn fn, ErrorCode code, const std::string& needle = {}) {
  try {
    fn();
    FAIL("no error thrown");
  } catch (const Error& e) {
    CHECK(e.code() == code);
    if (!needle.empty()) CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

GoldFile Gold(const std::string& s) {
  std::istringstream in(s);
  return ParseGoldFile(in);
}
RankingDump Dump(const std::string& s) {
  std::istringstream in(s);
  return ParseRankingDump(in);
}

Config DemoConfig() {
  Config c = Config::FromFile(kDemo + "/demo.conf", Config::NoEnv);
  c.data_dir = "";
  c.test_mode = true;
  c.async_retrain = false;
  c.batch_size = 1000000;
  c.admin_token = "t";
  return c;
}

SimConfig DemoSim(int iterations, std::size_t oracles = 3) {
  SimConfig s;
  s.iterations = iterations;
  s.sentences = LoadSentences(kDemo + "/sentences.txt");
  s.admin_token = "t";
  const auto policy = LoadPolicy(kDemo + "/policy.txt");
  for (std::size_t o = 0; o < oracles; ++o) {
    s.oracles.push_back({DefaultOracleWeights(), 0.0, policy, 7 + o});
  }
  return s;
}

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("adaptpara_sim_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string Run(const std::string& cmd, int* code) {
  std::string out;
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  *code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

}  // namespace

TEST_CASE("gold file parsing and its errors") {
  const auto g = Gold("# comment\ns one\t0\t1\ta:3,b:0\ns one\t2\t5\tc:1\n");
  REQUIRE(g.size() == 2);
  CHECK(g.at({"s one", {0, 1}}).at("a") == 3);
  CHECK(g.at({"s one", {2, 5}}).at("c") == 1);

  CheckError([] { Gold("s\t0\t1\n"); }, ErrorCode::kParseError, "line 1");
  CheckError([] { Gold("s\t0\t1\ta:1\ns\t0\tx\ta:1\n"); }, ErrorCode::kParseError, "line 2");
  CheckError([] { Gold("s\t0\t1\ta:4\n"); }, ErrorCode::kParseError, "grade");
  CheckError([] { Gold("\ns\t0\t1\ta:0,b:0\n"); }, ErrorCode::kParseError, "line 2");
  CheckError([] { Gold("s\t0\t1\ta:1\ns\t0\t1\tb:1\n"); }, ErrorCode::kParseError, "duplicate");
  CheckError([] { Gold("s\t3\t1\ta:1\n"); }, ErrorCode::kParseError, "empty span");
  CheckError([] { Gold("s\t0\t1\ta\n"); }, ErrorCode::kParseError, "cand:grade");

  std::ostringstream out;
  WriteGoldFile(out, g);
  CHECK(Gold(out.str()) == g);
}

TEST_CASE("ranking dump parsing and its errors") {
  const auto d = Dump("s\t0\t1\tb,a\ns\t0\t1\ta\n");
  REQUIRE(d.size() == 2);  // repeated keys are separate servings
  CHECK(d[0].second == std::vector<std::string>{"b", "a"});
  CheckError([] { Dump("s\t0\t1\ta,,b\n"); }, ErrorCode::kParseError, "line 1");
  CheckError([] { Dump("ok\t0\t1\ta\nbad line\n"); }, ErrorCode::kParseError, "line 2");
  CheckError([] { LoadRankingDump(kFix + "/sim/missing.tsv"); }, ErrorCode::kFileNotFound);
  std::ostringstream out;
  WriteRankingDump(out, d);
  CHECK(Dump(out.str()) == d);
}

TEST_CASE("eval ndcg: ideal order, the [0,3] file, guards") {
  const auto gold = Gold("s\t0\t1\ta:3,b:2,c:1,d:0\nt\t0\t2\tx:1\n");
  const auto ideal = EvalNdcg(Dump("s\t0\t1\ta,b,c,d\nt\t0\t2\tx\n"), gold);
  CHECK(ideal.mean == 1.0);
  CHECK(ideal.per_target.size() == 2);

  const auto r = EvalNdcg(LoadRankingDump(kFix + "/sim/dump_0_3.tsv"),
                          LoadGoldFile(kFix + "/sim/gold_0_3.tsv"), 2);
  // (0 + 7/log2(3)) / 7
  CHECK(r.mean == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-12));
  CHECK(r.mean == doctest::Approx(0.6309).epsilon(1e-4));

  const auto partial = EvalNdcg(Dump("s\t0\t1\ta,b\nu\t0\t1\tz\n"), gold);
  REQUIRE(partial.excluded.size() == 1);
  CHECK(partial.excluded[0].sentence == "u");
  CHECK(partial.per_target.size() == 1);

  CheckError([&] { EvalNdcg({}, gold); }, ErrorCode::kEmptyDump);
  CheckError([&] { EvalNdcg(Dump("u\t0\t1\tz\n"), gold); }, ErrorCode::kParseError);
}

TEST_CASE("induced grades: 3, 2 2, 1 1 1, then 0; ties by text") {
  const std::vector<std::string> c = {"h", "g", "f", "e", "d", "c", "b", "a"};
  const std::vector<double> u = {8, 7, 6, 5, 4, 3, 2, 1};
  const auto g = InducedGrades(c, u);
  CHECK(g == std::map<std::string, int>{{"h", 3}, {"g", 2}, {"f", 2}, {"e", 1},
                                        {"d", 1}, {"c", 1}, {"b", 0}, {"a", 0}});
  const auto tied = InducedGrades({"z", "y", "x"}, {1, 1, 1});
  CHECK(tied == std::map<std::string, int>{{"x", 3}, {"y", 2}, {"z", 2}});
  CHECK(InducedGrades({}, {}).empty());
}

TEST_CASE("oracle choice: argmax and softmax") {
  OracleUser oracle;
  oracle.true_weights[RankFeatures::kCandLogFreq] = 1.0;
  std::vector<RankFeatures> shown(3);
  shown[0].values[RankFeatures::kCandLogFreq] = 1.0;
  shown[1].values[RankFeatures::kCandLogFreq] = 2.0;
  shown[2].values[RankFeatures::kCandLogFreq] = 2.0;
  std::uint64_t rng = 5;
  CHECK(ChooseCandidate(oracle, shown, rng) == 1);  // first of the tied best
  CHECK(rng == 5);                                   // argmax draws nothing
  CheckError([&] { ChooseCandidate(oracle, {}, rng); }, ErrorCode::kInvalidEvent);

  oracle.noise_temp = 1.0;
  shown[0].values[RankFeatures::kCandLogFreq] = 1.0;
  shown[1].values[RankFeatures::kCandLogFreq] = 0.0;
  shown[2].values[RankFeatures::kCandLogFreq] = -1.0;
  const double z = std::exp(1.0) + 1.0 + std::exp(-1.0);
  const double expected[3] = {std::exp(1.0) / z, 1.0 / z, std::exp(-1.0) / z};
  int counts[3] = {0, 0, 0};
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) ++counts[ChooseCandidate(oracle, shown, rng)];
  for (int i = 0; i < 3; ++i) CHECK(counts[i] / double(draws) == doctest::Approx(expected[i]).epsilon(0.02));

  OracleUser bad;
  bad.noise_temp = -1.0;
  CheckError([&] { bad.Validate(); }, ErrorCode::kConfigError);
  bad.noise_temp = 0.0;
  bad.true_weights[0] = std::nan("");
  CheckError([&] { bad.Validate(); }, ErrorCode::kConfigError);
}

TEST_CASE("simulate N=1 serves the LM baseline and scores it") {
  Backend backend(DemoConfig());
  const auto result = Simulate(DemoSim(1), backend.assets(), InProcessTransport(backend.service()));
  REQUIRE(result.failures.empty());
  REQUIRE(result.iterations.size() == 1);
  const auto& it = result.iterations[0];
  CHECK(it.served_versions.ranker == kBaselineRankerMarker);
  REQUIRE(it.targets > 0);

  // rebuild every served list from the baseline ranker directly
  const Assets& assets = backend.assets();
  double sum = 0.0;
  for (const auto& [key, served] : it.served) {
    const auto text = assets.SegmentText(key.sentence, "x");
    const auto unit = MakeTargetUnit(text, key.span, assets, TargetProvenance::kModel);
    const auto cands = CandidatesFor(unit.lemma, unit.pos, assets.providers, assets.k_embed);
    std::vector<std::string> expected;
    for (const auto& r : BaselineRank(unit, cands, text, assets)) {
      if (expected.size() == assets.display_cap) break;
      expected.push_back(r.text);
    }
    CHECK(served == expected);
    sum += NdcgAtK(served, result.gold.at(key), 10).value;
  }
  CHECK(it.ndcg == doctest::Approx(sum / it.served.size()).epsilon(1e-12));
  CHECK(CurveCsv(result).rfind("iteration,ndcg\n1,", 0) == 0);
}

TEST_CASE("simulate: iteration 1 events carry baseline versions, later ones never their own") {
  Backend backend(DemoConfig());
  const auto result = Simulate(DemoSim(3), backend.assets(), InProcessTransport(backend.service()));
  REQUIRE(result.failures.empty());
  const auto records = backend.events().Records();
  const auto table = IterationTable::Replay(records, 1000000);
  for (const auto& e : backend.events().Events()) {
    const int it = table.IterationOf(e.seq).value();
    if (it == 1) CHECK(e.model_versions.ranker == kBaselineRankerMarker);
    if (it > 1) CHECK(VersionIteration(e.model_versions.ranker) == it - 1);
  }
  CHECK(CheckServingHygiene(records, 1000000).empty());
}

TEST_CASE("self-consistent noiseless oracle: learning curve and final quality") {
  Backend backend(DemoConfig());
  const auto result = Simulate(DemoSim(9), backend.assets(), InProcessTransport(backend.service()));
  REQUIRE(result.failures.empty());
  REQUIRE(result.iterations.size() == 9);
  const double first = result.iterations[0].ndcg;
  for (std::size_t i = 4; i < 9; ++i) CHECK(result.iterations[i].ndcg >= first + 0.10);
  CHECK(result.iterations[8].ndcg >= 0.95);

  // a ranker holding the oracle's own weights ranks every gold target perfectly
  const Assets& assets = backend.assets();
  RankingModel truth;
  truth.weights = DefaultOracleWeights();
  truth.trained_on_iterations = {1};
  for (const auto& [key, grades] : result.gold) {
    const auto text = assets.SegmentText(key.sentence, "x");
    const auto unit = MakeTargetUnit(text, key.span, assets, TargetProvenance::kModel);
    const auto cands = CandidatesFor(unit.lemma, unit.pos, assets.providers, assets.k_embed);
    std::vector<std::string> ranked;
    for (const auto& r : Rank(unit, cands, truth, text, assets)) ranked.push_back(r.text);
    CHECK(NdcgAtK(ranked, grades, 10).value == doctest::Approx(1.0).epsilon(1e-12));
  }
}

// Known not to hold on the demo corpus: the mean moves by ~1e-4 once it
// plateaus (see README, "Known deviations").
TEST_CASE("self-consistent noiseless oracle: per-iteration NDCG non-decreasing" *
          doctest::should_fail()) {
  Backend backend(DemoConfig());
  const auto result = Simulate(DemoSim(9), backend.assets(), InProcessTransport(backend.service()));
  for (std::size_t i = 1; i < result.iterations.size(); ++i) {
    CHECK(result.iterations[i].ndcg >= result.iterations[i - 1].ndcg);
  }
}

TEST_CASE("simulate is deterministic and the dumps re-evaluate to the curve") {
  auto run = [] {
    Backend backend(DemoConfig());
    return Simulate(DemoSim(3), backend.assets(), InProcessTransport(backend.service()));
  };
  const auto a = run();
  const auto b = run();
  CHECK(CurveCsv(a) == CurveCsv(b));
  CHECK(a.gold == b.gold);
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    CHECK(a.iterations[i].served == b.iterations[i].served);
    CHECK(a.iterations[i].retrain == b.iterations[i].retrain);
    // through the file formats
    std::stringstream dump, gold;
    WriteRankingDump(dump, a.iterations[i].served);
    WriteGoldFile(gold, a.gold);
    const auto report = EvalNdcg(ParseRankingDump(dump), ParseGoldFile(gold), 10);
    CHECK(report.mean == doctest::Approx(a.iterations[i].ndcg).epsilon(1e-12));
    CHECK(report.excluded.empty());
  }
}

TEST_CASE("external gold: unknown targets are excluded and counted") {
  Backend backend(DemoConfig());
  auto sim = DemoSim(1, 1);
  sim.sentences.resize(1);
  const std::string& s = sim.sentences[0];
  const auto at = s.find("meticulous");
  sim.gold = Gold(s + "\t" + std::to_string(at) + "\t" + std::to_string(at + 10) + "\tcareful:3\n");
  sim.external_gold = true;
  const auto result = Simulate(sim, backend.assets(), InProcessTransport(backend.service()));
  const auto& it = result.iterations[0];
  CHECK(it.targets == 1);
  CHECK(it.targets + it.excluded >= 1);
  CHECK(result.gold.size() == 1);
}

TEST_CASE("replay of a two-iteration run reproduces the state") {
  const fs::path dir = TempDir("replay");
  Config config = DemoConfig();
  config.data_dir = dir.string();
  std::string status;
  {
    Backend backend(config);
    const auto result =
        Simulate(DemoSim(2), backend.assets(), InProcessTransport(backend.service()));
    REQUIRE(result.failures.empty());
    status = backend.service().Handle({"GET", "/model/status", "", {}}).body;
    backend.CloseStores();
  }
  const Assets assets = Assets::Load(config);
  const auto check = CheckReplay(config, assets, dir, status);
  CHECK(check.identical);
  CHECK(check.live == check.replayed);
  auto tampered = nlohmann::ordered_json::parse(status);
  tampered["batch_size"] = 5;
  CHECK_FALSE(CheckReplay(config, assets, dir, tampered.dump()).identical);
  fs::remove_all(dir);
}

TEST_CASE("unreachable service") {
  const auto transport = HttpTransport("http://127.0.0.1:1");
  CheckError([&] { transport({"GET", "/model/status", "", {}}); },
             ErrorCode::kServiceUnreachable);
}

TEST_CASE("cli: byte-identical reruns, eval-ndcg and replay-check agree") {
  const fs::path a = TempDir("cli_a");
  const fs::path b = TempDir("cli_b");
  int code = -1;
  const std::string base = kCli + " simulate --iterations 2 --out ";
  const std::string csv = Run(base + a.string(), &code);
  CHECK(code == 0);
  Run(base + b.string(), &code);
  CHECK(code == 0);
  CHECK(Slurp(a / "curve.csv") == csv);
  CHECK(Slurp(a / "curve.csv") == Slurp(b / "curve.csv"));
  // the manifest names its own output paths only through relative dump names
  CHECK(Slurp(a / "manifest.json") == Slurp(b / "manifest.json"));
  CHECK(Slurp(a / "gold.tsv") == Slurp(b / "gold.tsv"));

  const std::string eval = Run(kCli + " eval-ndcg --gold " + (a / "gold.tsv").string() +
                                   " --dump " + (a / "rankings/iteration-2.tsv").string(),
                               &code);
  CHECK(code == 0);
  const std::string line2 = csv.substr(csv.find("\n2,") + 3, 8);
  CHECK(eval.find("mean_ndcg@10\t" + line2) == 0);

  Run(kCli + " replay-check --log-dir " + (a / "run").string() + " --expected " +
          (a / "manifest.json").string(),
      &code);
  CHECK(code == 0);

  Run(kCli + " eval-ndcg --gold " + (a / "gold.tsv").string() + " --dump " +
          (kFix + "/empty.txt"),
      &code);
  CHECK(code == 2);  // EMPTY_DUMP

  const std::string stats = Run(kCli + " resources stats", &code);
  CHECK(code == 0);
  CHECK(stats.find("PPDB\t") != std::string::npos);
  CHECK(stats.find("\t1\n") != std::string::npos);  // the deliberately malformed PPDB line
  fs::remove_all(a);
  fs::remove_all(b);
}

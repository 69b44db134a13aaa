// sim-cli: synthetic-user harness, evaluation and serving front end.
#include <pthread.h>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "adaptpara/api.hpp"
#include "adaptpara/checksum.hpp"
#include "adaptpara/error.hpp"
#include "adaptpara/sim.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace adaptpara;
using Json = nlohmann::ordered_json;

namespace {

// --<config key> flags, applied on top of the config file.
struct ConfigFlags {
  std::string path;
  std::map<std::string, std::string> values;

  void Register(CLI::App* cmd, const std::string& default_path) {
    path = default_path;
    cmd->add_option("--config", path, "service config file")->capture_default_str();
    for (const auto& key : Config::Keys()) {
      cmd->add_option_function<std::string>(
          "--" + key, [this, key](const std::string& v) { values[key] = v; },
          "overrides config key " + key);
    }
  }
  bool Has(const std::string& key) const { return values.contains(key); }
  Config Build() const {
    Config c = path.empty() ? Config{} : Config::FromFile(path);
    for (const auto& [k, v] : values) c.Set(k, v, fs::current_path().string());
    return c;
  }
};

std::string DefaultDemoPath(const std::string& file) {
  return (fs::path(ADAPTPARA_DEMO_DIR) / file).string();
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out << content;
}

Json ConfigJson(const Config& c) {
  return Json{{"ppdb_path", c.ppdb_path},
              {"synlex_path", c.synlex_path},
              {"dt_path", c.dt_path},
              {"embeddings_path", c.embeddings_path},
              {"lm_corpus_path", c.lm_corpus_path},
              {"frequency_path", c.frequency_path},
              {"seed_lexicon_path", c.seed_lexicon_path},
              {"mwe_lexicon_path", c.mwe_lexicon_path},
              {"lemma_lexicon_path", c.lemma_lexicon_path},
              {"pos_lexicon_path", c.pos_lexicon_path},
              {"lm_order", c.lm_order},
              {"batch_size", c.batch_size},
              {"display_cap", c.display_cap},
              {"k_embed", c.k_embed},
              {"max_text_chars", c.max_text_chars},
              {"adaboost_rounds", c.adaboost_rounds},
              {"target_threshold", c.target_threshold},
              {"ranker_epochs", c.ranker_epochs},
              {"ranker_lr", c.ranker_lr},
              {"ranker_l2", c.ranker_l2},
              {"seed", c.seed},
              {"test_mode", c.test_mode},
              {"async_retrain", c.async_retrain}};
}

Json VersionsJson(const ModelVersionPair& v) {
  return Json{{"target", v.target}, {"ranker", v.ranker}};
}

struct SimulateArgs {
  ConfigFlags config;
  std::string sentences = DefaultDemoPath("sentences.txt");
  std::string policy = DefaultDemoPath("policy.txt");
  std::string gold;
  std::string out = "sim-out";
  std::string url;
  int iterations = 9;
  std::size_t sentences_per_iteration = 50;
  int oracles = 3;
  double noise_temp = 0.0;
  std::uint64_t oracle_seed = 7;
  std::vector<double> weights;
  std::size_t k = 10;
};

int RunSimulate(SimulateArgs& a) {
  const auto started = std::chrono::steady_clock::now();
  Config config = a.config.Build();
  // one harness iteration is one loop iteration unless asked otherwise
  if (!a.config.Has("batch_size")) config.batch_size = 1000000;
  const fs::path out(a.out);
  fs::create_directories(out / "rankings");
  const bool in_process = a.url.empty();
  if (in_process) {
    if (!a.config.Has("data_dir")) config.data_dir = (out / "run").string();
    if (!config.data_dir.empty()) {
      fs::remove(fs::path(config.data_dir) / "events.jsonl");
      fs::remove(fs::path(config.data_dir) / "documents.jsonl");
    }
    config.test_mode = true;
    config.async_retrain = false;
  }
  if (config.admin_token.empty()) config.admin_token = "sim-token";

  SimConfig sim;
  sim.iterations = a.iterations;
  sim.sentences = LoadSentences(a.sentences);
  sim.sentences_per_iteration = a.sentences_per_iteration;
  sim.admin_token = config.admin_token;
  sim.k = a.k;
  const auto policy = a.policy.empty() ? std::set<std::string>{} : LoadPolicy(a.policy);
  auto weights = DefaultOracleWeights();
  if (!a.weights.empty()) {
    if (a.weights.size() != kRankFeatureCount) {
      throw Error(ErrorCode::kConfigError,
                  "--weights needs " + std::to_string(kRankFeatureCount) + " values");
    }
    std::copy(a.weights.begin(), a.weights.end(), weights.begin());
  }
  for (int o = 0; o < a.oracles; ++o) {
    sim.oracles.push_back({weights, a.noise_temp, policy, a.oracle_seed + static_cast<std::uint64_t>(o)});
  }
  if (!a.gold.empty()) {
    sim.gold = LoadGoldFile(a.gold);
    sim.external_gold = true;
  }

  std::optional<Backend> backend;
  std::optional<Assets> remote_assets;
  Transport transport;
  if (in_process) {
    backend.emplace(config);
    transport = InProcessTransport(backend->service());
  } else {
    remote_assets.emplace(Assets::Load(config));
    transport = HttpTransport(a.url);
  }
  const Assets& assets = in_process ? backend->assets() : *remote_assets;

  SimResult result = Simulate(sim, assets, transport);

  const HttpResponse status_response = transport({"GET", "/model/status", "", {}});
  const Json status = Json::parse(status_response.body);

  Json checks = Json::object();
  checks["harness"] = result.failures.empty();
  Json hygiene = Json::array();
  Json replay = nullptr;
  if (in_process) {
    for (const auto& v : CheckServingHygiene(backend->events().Records(), config.batch_size)) {
      hygiene.push_back({{"seq", v.seq},
                         {"event_iteration", v.event_iteration},
                         {"version", v.version},
                         {"version_iteration", v.version_iteration}});
    }
    checks["serving_hygiene"] = hygiene.empty();
    backend->CloseStores();
    if (!config.data_dir.empty()) {
      const auto r = CheckReplay(config, assets, config.data_dir, status_response.body);
      replay = r.identical;
      checks["replay"] = r.identical;
      if (!r.identical) {
        WriteFile(out / "replay_live.json", r.live);
        WriteFile(out / "replay_replayed.json", r.replayed);
      }
    }
  }

  const std::string csv = CurveCsv(result);
  WriteFile(out / "curve.csv", csv);
  std::ostringstream gold;
  WriteGoldFile(gold, result.gold);
  WriteFile(out / "gold.tsv", gold.str());

  Json iterations = Json::array();
  for (const auto& it : result.iterations) {
    std::ostringstream dump;
    WriteRankingDump(dump, it.served);
    const std::string dump_name = "rankings/iteration-" + std::to_string(it.iteration) + ".tsv";
    WriteFile(out / dump_name, dump.str());
    iterations.push_back({{"iteration", it.iteration},
                          {"ndcg", it.ndcg},
                          {"targets", it.targets},
                          {"excluded", it.excluded},
                          {"replaces", it.replaces},
                          {"highlights", it.highlights},
                          {"rejects", it.rejects},
                          {"served_versions", VersionsJson(it.served_versions)},
                          {"retrain", it.retrain},
                          {"ranking_dump", dump_name},
                          {"ranking_dump_fnv1a64", Hex64(Fnv1a64(dump.str()))}});
  }

  bool ok = result.failures.empty() && hygiene.empty() && (replay.is_null() || replay == true);
  Json oracles = Json::array();
  for (const auto& o : sim.oracles) {
    oracles.push_back({{"true_weights", o.true_weights},
                       {"noise_temp", o.noise_temp},
                       {"seed", o.seed},
                       {"highlight_policy", o.highlight_policy}});
  }
  Json manifest{{"v", 1},
                {"transport", in_process ? "in-process" : a.url},
                {"config", ConfigJson(config)},
                {"simulation",
                 {{"iterations", sim.iterations},
                  {"sentences_file", a.sentences},
                  {"sentences", sim.sentences.size()},
                  {"sentences_per_iteration", sim.sentences_per_iteration},
                  {"k", sim.k},
                  {"gold", a.gold.empty() ? "induced from oracle 1" : a.gold},
                  {"oracles", oracles}}},
                {"iterations", iterations},
                {"curve_fnv1a64", Hex64(Fnv1a64(csv))},
                {"gold_fnv1a64", Hex64(Fnv1a64(gold.str()))},
                {"final_status", status},
                {"hygiene_violations", hygiene},
                {"failures", result.failures},
                {"checks", checks},
                {"ok", ok}};
  WriteFile(out / "manifest.json", manifest.dump(2) + "\n");

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::cout << csv;
  for (const auto& f : result.failures) std::cerr << "check failed: " << f << '\n';
  if (!hygiene.empty()) std::cerr << "check failed: " << hygiene.size() << " hygiene violations\n";
  if (replay == false) std::cerr << "check failed: replayed state differs from the live state\n";
  std::fprintf(stderr, "%s in %.1fs, outputs in %s\n", ok ? "ok" : "FAILED", seconds,
               out.string().c_str());
  return ok ? 0 : 1;
}

int RunEvalNdcg(const std::string& gold_path, const std::string& dump_path, std::size_t k,
                bool per_target) {
  const auto report = EvalNdcg(LoadRankingDump(dump_path), LoadGoldFile(gold_path), k);
  if (per_target) {
    for (const auto& [key, v] : report.per_target) {
      std::printf("%s\t%zu\t%zu\t%.6f\n", key.sentence.c_str(), key.span.start, key.span.end, v);
    }
  }
  for (const auto& key : report.excluded) {
    std::fprintf(stderr, "not in gold: %s [%zu,%zu)\n", key.sentence.c_str(), key.span.start,
                 key.span.end);
  }
  std::printf("mean_ndcg@%zu\t%.6f\ntargets\t%zu\nexcluded\t%zu\n", k, report.mean,
              report.per_target.size(), report.excluded.size());
  return 0;
}

int RunResourceStats(const Config& config) {
  const Assets assets = Assets::Load(config);
  std::printf("provider\trules\tskipped_lines\n");
  for (const auto& s : assets.providers.stats()) {
    std::printf("%s\t%zu\t%zu\n", s.name.c_str(), s.rules, s.skipped_lines);
  }
  if (const auto* e = assets.providers.embeddings()) {
    std::printf("embeddings\t%zu vectors\tdim %zu\n", e->size(), e->dim());
  }
  if (assets.lm) {
    std::printf("lm\torder %d\tvocab %zu\ttokens %zu\n", assets.lm->order(),
                assets.lm->vocab_size(), assets.lm->total_unigrams());
  }
  std::printf("frequencies\t%zu\nmwe_lexicon\t%zu\nseed_targets\t%zu\n",
              assets.frequencies.size(), assets.mwe_lexicon.size(), assets.seed_targets.size());
  return 0;
}

int RunReplayCheck(const ConfigFlags& flags, const std::string& data_dir,
                   const std::string& expected_path) {
  std::ifstream in(expected_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + expected_path);
  std::string expected(std::istreambuf_iterator<char>(in), {});
  const Json parsed = Json::parse(expected);
  Config config = flags.Build();
  // a simulate manifest also says how the run was configured
  if (parsed.contains("final_status")) {
    expected = parsed["final_status"].dump();
    for (const auto& [key, value] : parsed["config"].items()) {
      if (flags.Has(key) || key.ends_with("_path")) continue;
      config.Set(key, value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  const Assets assets = Assets::Load(config);
  const auto r = CheckReplay(config, assets, data_dir, expected);
  std::cout << (r.identical ? "identical" : "DIFFERENT") << '\n';
  if (!r.identical) std::cout << "live:     " << r.live << "\nreplayed: " << r.replayed << '\n';
  return r.identical ? 0 : 1;
}

int RunServe(const Config& config) {
  // signals are taken by a dedicated thread so Stop() runs outside a handler
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Backend backend(config, [](const std::string& line) { std::cerr << line << '\n'; });
  HttpServer server(backend.service());
  const int port = server.Bind(config.bind_address, config.port);
  std::cerr << "listening on " << config.bind_address << ':' << port << '\n';
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "shutting down\n";
    server.Stop();
  });
  server.Listen();
  backend.loop().WaitIdle();
  backend.CloseStores();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive paraphrasing: simulation harness and tools"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run synthetic users through the loop");
  sim.config.Register(simulate, DefaultDemoPath("demo.conf"));
  simulate->add_option("--sentences", sim.sentences, "one sentence per line")->capture_default_str();
  simulate->add_option("--policy", sim.policy, "lemmas the oracles always treat as targets")
      ->capture_default_str();
  simulate->add_option("--gold", sim.gold, "external gold TSV (default: induced)");
  simulate->add_option("--out", sim.out, "output directory")->capture_default_str();
  simulate->add_option("--url", sim.url, "drive a running service instead of an in-process one");
  simulate->add_option("--iterations", sim.iterations)->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--sentences-per-iteration", sim.sentences_per_iteration)->capture_default_str();
  simulate->add_option("--oracles", sim.oracles)->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--noise-temp", sim.noise_temp)->capture_default_str()->check(CLI::NonNegativeNumber);
  simulate->add_option("--oracle-seed", sim.oracle_seed)->capture_default_str();
  simulate->add_option("--weights", sim.weights, "oracle true weights, one per rank feature")
      ->delimiter(',');
  simulate->add_option("--k", sim.k, "NDCG cutoff")->capture_default_str();

  std::string gold_path, dump_path;
  std::size_t k = 10;
  bool per_target = false;
  auto* eval = app.add_subcommand("eval-ndcg", "NDCG of a ranking dump against a gold file");
  eval->add_option("--gold", gold_path)->required();
  eval->add_option("--dump", dump_path)->required();
  eval->add_option("--k", k)->capture_default_str();
  eval->add_flag("--per-target", per_target);

  ConfigFlags resource_flags;
  auto* resources = app.add_subcommand("resources", "resource inspection");
  resources->require_subcommand(1);
  auto* stats = resources->add_subcommand("stats", "per-provider rule and skipped-line counts");
  resource_flags.Register(stats, DefaultDemoPath("demo.conf"));

  ConfigFlags replay_flags;
  std::string replay_dir, expected_path;
  auto* replay = app.add_subcommand("replay-check", "rebuild the loop from a log and compare");
  replay_flags.Register(replay, DefaultDemoPath("demo.conf"));
  replay->add_option("--log-dir", replay_dir, "directory holding events.jsonl")->required();
  replay->add_option("--expected", expected_path, "status JSON or simulate manifest")->required();

  ConfigFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  serve_flags.Register(serve, DefaultDemoPath("demo.conf"));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) return RunSimulate(sim);
    if (*eval) return RunEvalNdcg(gold_path, dump_path, k, per_target);
    if (*stats) return RunResourceStats(resource_flags.Build());
    if (*replay) return RunReplayCheck(replay_flags, replay_dir, expected_path);
    if (*serve) return RunServe(serve_flags.Build());
  } catch (const Error& e) {
    std::cerr << ErrorCodeName(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

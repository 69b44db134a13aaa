#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adaptpara {

// Service configuration. The file is TOML-style `key = value` lines; every
// key can be overridden by an environment variable of the same name in
// upper case (batch_size -> BATCH_SIZE).
struct Config {
  // Resource files; empty means "not configured".
  std::string ppdb_path;
  std::string synlex_path;
  std::string dt_path;
  std::string embeddings_path;
  std::string lm_corpus_path;
  std::string frequency_path;
  std::string seed_lexicon_path;
  std::string mwe_lexicon_path;
  std::string lemma_lexicon_path;
  std::string pos_lexicon_path;
  int lm_order = 3;

  std::string data_dir = "run";
  std::size_t batch_size = 100;
  std::size_t display_cap = 10;
  std::size_t k_embed = 10;
  std::size_t max_text_chars = 100000;

  int adaboost_rounds = 50;
  double target_threshold = 0.0;
  int ranker_epochs = 100;
  double ranker_lr = 0.1;
  double ranker_l2 = 0.001;
  std::uint64_t seed = 42;

  std::string admin_token;
  std::string bind_address = "127.0.0.1";
  int port = 8080;
  bool test_mode = false;
  bool async_retrain = true;
  // Empty: allow-all in test mode, no CORS headers otherwise.
  std::string cors_allow_origin;

  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  // Relative paths in the file are resolved against the file's directory.
  static Config FromFile(const std::string& path, const EnvLookup& env = ProcessEnv);
  static Config FromString(std::string_view content, const std::string& base_dir = {},
                           const EnvLookup& env = ProcessEnv);
  static std::optional<std::string> ProcessEnv(const std::string& name);
  static std::optional<std::string> NoEnv(const std::string&) { return std::nullopt; }

  // Throws Error(kConfigError) for unknown keys or bad values.
  void Set(std::string_view key, std::string_view value, const std::string& base_dir = {});
  void ApplyEnv(const EnvLookup& env, const std::string& base_dir = {});

  static const std::vector<std::string>& Keys();
};

}  // namespace adaptpara

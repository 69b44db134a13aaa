#include "adaptpara/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adaptpara/error.hpp"
#include "io_util.hpp"

namespace adaptpara {

namespace {

namespace fs = std::filesystem;

std::string Upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 32);
  }
  return out;
}

std::string Unquote(std::string_view v) {
  v = detail::Trim(v);
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\''))) {
    v = v.substr(1, v.size() - 2);
  }
  return std::string(v);
}

// Strips a trailing comment outside quotes.
std::string_view StripComment(std::string_view line) {
  bool quoted = false;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == quote) quoted = false;
    } else if (c == '"' || c == '\'') {
      quoted = true;
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

[[noreturn]] void Bad(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::kConfigError,
              "invalid value '" + std::string(value) + "' for " + std::string(key));
}

template <typename T>
T Number(std::string_view key, std::string_view value) {
  if constexpr (std::is_floating_point_v<T>) {
    const auto v = detail::ParseDouble(value);
    if (!v) Bad(key, value);
    return *v;
  } else {
    const auto v = detail::ParseInt<T>(value);
    if (!v) Bad(key, value);
    return *v;
  }
}

bool Bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  Bad(key, value);
}

std::string PathValue(std::string_view value, const std::string& base_dir) {
  if (value.empty() || base_dir.empty()) return std::string(value);
  const fs::path p(value);
  if (p.is_absolute()) return std::string(value);
  return (fs::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

const std::vector<std::string>& Config::Keys() {
  static const std::vector<std::string> kKeys = {
      "ppdb_path",        "synlex_path",     "dt_path",           "embeddings_path",
      "lm_corpus_path",   "frequency_path",  "seed_lexicon_path", "mwe_lexicon_path",
      "lemma_lexicon_path", "pos_lexicon_path", "lm_order",       "data_dir",
      "batch_size",       "display_cap",     "k_embed",           "max_text_chars",
      "adaboost_rounds",  "target_threshold", "ranker_epochs",    "ranker_lr",
      "ranker_l2",        "seed",            "admin_token",       "bind_address",
      "port",             "test_mode",       "async_retrain",     "cors_allow_origin"};
  return kKeys;
}

void Config::Set(std::string_view key, std::string_view raw, const std::string& base_dir) {
  const std::string value = Unquote(raw);
  std::string* path_field = nullptr;
  if (key == "ppdb_path") path_field = &ppdb_path;
  else if (key == "synlex_path") path_field = &synlex_path;
  else if (key == "dt_path") path_field = &dt_path;
  else if (key == "embeddings_path") path_field = &embeddings_path;
  else if (key == "lm_corpus_path") path_field = &lm_corpus_path;
  else if (key == "frequency_path") path_field = &frequency_path;
  else if (key == "seed_lexicon_path") path_field = &seed_lexicon_path;
  else if (key == "mwe_lexicon_path") path_field = &mwe_lexicon_path;
  else if (key == "lemma_lexicon_path") path_field = &lemma_lexicon_path;
  else if (key == "pos_lexicon_path") path_field = &pos_lexicon_path;
  else if (key == "data_dir") path_field = &data_dir;
  if (path_field) {
    *path_field = PathValue(value, base_dir);
    return;
  }

  if (key == "lm_order") lm_order = Number<int>(key, value);
  else if (key == "batch_size") batch_size = Number<std::size_t>(key, value);
  else if (key == "display_cap") display_cap = Number<std::size_t>(key, value);
  else if (key == "k_embed") k_embed = Number<std::size_t>(key, value);
  else if (key == "max_text_chars") max_text_chars = Number<std::size_t>(key, value);
  else if (key == "adaboost_rounds") adaboost_rounds = Number<int>(key, value);
  else if (key == "target_threshold") target_threshold = Number<double>(key, value);
  else if (key == "ranker_epochs") ranker_epochs = Number<int>(key, value);
  else if (key == "ranker_lr") ranker_lr = Number<double>(key, value);
  else if (key == "ranker_l2") ranker_l2 = Number<double>(key, value);
  else if (key == "seed") seed = Number<std::uint64_t>(key, value);
  else if (key == "admin_token") admin_token = value;
  else if (key == "bind_address") bind_address = value;
  else if (key == "port") port = Number<int>(key, value);
  else if (key == "test_mode") test_mode = Bool(key, value);
  else if (key == "async_retrain") async_retrain = Bool(key, value);
  else if (key == "cors_allow_origin") cors_allow_origin = value;
  else throw Error(ErrorCode::kConfigError, "unknown config key '" + std::string(key) + "'");

  if ((key == "batch_size" && batch_size == 0) || (key == "display_cap" && display_cap == 0) ||
      (key == "lm_order" && lm_order < 1)) {
    Bad(key, value);
  }
}

void Config::ApplyEnv(const EnvLookup& env, const std::string& base_dir) {
  for (const auto& key : Keys()) {
    if (auto v = env(Upper(key))) Set(key, *v, base_dir);
  }
}

std::optional<std::string> Config::ProcessEnv(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

Config Config::FromString(std::string_view content, const std::string& base_dir,
                          const EnvLookup& env) {
  Config config;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::Trim(StripComment(line));
    if (body.empty() || body.front() == '[') continue;  // TOML tables are ignored
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kConfigError,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    config.Set(detail::Trim(body.substr(0, eq)), body.substr(eq + 1), base_dir);
  }
  // Env overrides take paths relative to the working directory.
  config.ApplyEnv(env);
  return config;
}

Config Config::FromFile(const std::string& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto dir = fs::path(path).parent_path().string();
  return FromString(buffer.str(), dir, env);
}

}  // namespace adaptpara

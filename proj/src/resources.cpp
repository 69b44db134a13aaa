#include "adaptpara/resources.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "adaptpara/error.hpp"
#include "adaptpara/unicode.hpp"
#include "io_util.hpp"

namespace adaptpara {

namespace {

constexpr std::string_view kPpdbScoreKey = "PPDB2.0Score";

void RequireRules(const RuleFile& file, const std::string& path) {
  if (file.rules.empty()) {
    throw Error(ErrorCode::kNoValidRules, "no valid rules in " + path);
  }
}

}  // namespace

std::string_view OriginName(Origin origin) {
  switch (origin) {
    case Origin::kPpdb: return "PPDB";
    case Origin::kSynlex: return "SYNLEX";
    case Origin::kDt: return "DT";
    case Origin::kEmbed: return "EMBED";
  }
  return "?";
}

std::optional<Origin> ParseOrigin(std::string_view name) {
  for (std::size_t i = 0; i < kNumOrigins; ++i) {
    const auto o = static_cast<Origin>(i);
    if (OriginName(o) == name) return o;
  }
  return std::nullopt;
}

std::vector<Origin> OriginSet::members() const {
  std::vector<Origin> out;
  for (std::size_t i = 0; i < kNumOrigins; ++i) {
    if (Has(static_cast<Origin>(i))) out.push_back(static_cast<Origin>(i));
  }
  return out;
}

void MinMaxNormalize(std::vector<ParaphraseRule>& rules) {
  if (rules.empty()) return;
  const auto [lo, hi] = std::minmax_element(
      rules.begin(), rules.end(),
      [](const ParaphraseRule& a, const ParaphraseRule& b) { return a.score < b.score; });
  const double min = lo->score;
  const double range = hi->score - min;
  for (auto& rule : rules) {
    rule.score = range > 0.0 ? (rule.score - min) / range : 1.0;
  }
}

RuleFile LoadPpdb(const std::string& path) {
  auto in = detail::OpenOrThrow(path);
  RuleFile out;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::IsSkippable(line)) continue;
    const auto fields = detail::Split(line, "|||");
    if (fields.size() < 4) {
      ++out.skipped_lines;
      continue;
    }
    ParaphraseRule rule;
    rule.origin = Origin::kPpdb;
    rule.source = detail::NormalizePhrase(fields[1]);
    rule.target = detail::NormalizePhrase(fields[2]);
    std::optional<double> score;
    for (auto feature : detail::SplitWhitespace(fields[3])) {
      const auto eq = feature.find('=');
      if (eq != std::string_view::npos && feature.substr(0, eq) == kPpdbScoreKey) {
        score = detail::ParseDouble(feature.substr(eq + 1));
      }
    }
    if (fields.size() >= 6) rule.entailment = std::string(detail::Trim(fields[5]));
    if (!score || !std::isfinite(*score) || rule.source.empty() || rule.target.empty() ||
        rule.source == rule.target) {
      ++out.skipped_lines;
      continue;
    }
    rule.score = *score;
    out.rules.push_back(std::move(rule));
  }
  RequireRules(out, path);
  MinMaxNormalize(out.rules);
  return out;
}

RuleFile LoadSynlex(const std::string& path) {
  auto in = detail::OpenOrThrow(path);
  RuleFile out;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::IsSkippable(line)) continue;
    const auto fields = detail::Split(line, "\t");
    const auto pos = fields.size() == 3 ? ParsePos(detail::Trim(fields[1])) : std::nullopt;
    const std::string source = pos ? detail::NormalizePhrase(fields[0]) : std::string();
    if (!pos || source.empty()) {
      ++out.skipped_lines;
      continue;
    }
    for (auto synonym : detail::Split(fields[2], ",")) {
      std::string target = detail::NormalizePhrase(synonym);
      if (target.empty() || target == source) continue;
      out.rules.push_back({source, std::move(target), 1.0, Origin::kSynlex, pos, {}});
    }
  }
  RequireRules(out, path);
  return out;
}

RuleFile LoadDt(const std::string& path) {
  auto in = detail::OpenOrThrow(path);
  RuleFile out;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::IsSkippable(line)) continue;
    const auto fields = detail::Split(line, "\t");
    if (fields.size() != 3) {
      ++out.skipped_lines;
      continue;
    }
    const auto score = detail::ParseDouble(fields[2]);
    std::string source = detail::NormalizePhrase(fields[0]);
    std::string target = detail::NormalizePhrase(fields[1]);
    if (!score || !std::isfinite(*score) || source.empty() || target.empty() ||
        source == target) {
      ++out.skipped_lines;
      continue;
    }
    out.rules.push_back({std::move(source), std::move(target), *score, Origin::kDt, {}, {}});
  }
  RequireRules(out, path);
  MinMaxNormalize(out.rules);
  return out;
}

bool EmbeddingTable::Add(std::string_view key, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "vector for '" + std::string(key) + "' has " +
                    std::to_string(vector.size()) + " components, expected " +
                    std::to_string(dim_));
  }
  for (double v : vector) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidVector,
                  "non-finite component in vector for '" + std::string(key) + "'");
    }
  }
  std::string lowered = unicode::ToLower(key);
  if (index_.contains(lowered)) return false;
  index_.emplace(lowered, keys_.size());
  keys_.push_back(std::move(lowered));
  values_.insert(values_.end(), vector.begin(), vector.end());
  return true;
}

std::optional<std::size_t> EmbeddingTable::Find(std::string_view key) const {
  const auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EmbeddingTable LoadEmbeddings(const std::string& path) {
  auto in = detail::OpenOrThrow(path);
  std::string line;
  std::optional<std::size_t> count;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    if (detail::IsSkippable(line)) continue;
    const auto header = detail::SplitWhitespace(line);
    if (header.size() == 2) {
      count = detail::ParseInt<std::size_t>(header[0]);
      dim = detail::ParseInt<std::size_t>(header[1]).value_or(0);
    }
    if (!count || dim == 0) {
      throw Error(ErrorCode::kParseError, path + ": expected 'count dim' header");
    }
    break;
  }
  if (!count) throw Error(ErrorCode::kParseError, path + ": missing header");

  EmbeddingTable table(dim);
  std::size_t rows = 0;
  std::size_t line_no = 1;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::IsSkippable(line)) continue;
    const auto parts = detail::SplitWhitespace(line);
    values.clear();
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const auto v = detail::ParseDouble(parts[i]);
      if (!v) {
        throw Error(ErrorCode::kInvalidVector,
                    path + ":" + std::to_string(line_no) + ": bad number '" +
                        std::string(parts[i]) + "'");
      }
      values.push_back(*v);
    }
    try {
      table.Add(parts[0], values);
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    ++rows;
  }
  if (rows != *count) {
    throw Error(ErrorCode::kDimensionMismatch,
                path + ": header declares " + std::to_string(*count) + " rows, found " +
                    std::to_string(rows));
  }
  return table;
}

std::string EmbeddingKey(std::string_view lemma) {
  std::string key = detail::NormalizePhrase(lemma);
  std::replace(key.begin(), key.end(), ' ', '_');
  return key;
}

std::vector<Neighbor> EmbedNeighbors(const EmbeddingTable& table, std::string_view query,
                                     std::size_t k) {
  const auto qi = table.Find(query);
  if (!qi || k == 0) return {};
  const auto q = table.vector(*qi);
  double qq = 0.0;
  for (double v : q) qq += v * v;

  std::vector<Neighbor> all;
  all.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (i == *qi) continue;
    const auto v = table.vector(i);
    double dot = 0.0;
    double vv = 0.0;
    for (std::size_t d = 0; d < q.size(); ++d) {
      dot += q[d] * v[d];
      vv += v[d] * v[d];
    }
    const double denom = std::sqrt(qq * vv);
    const double cosine = denom > 0.0 ? std::clamp(dot / denom, -1.0, 1.0) : 0.0;
    all.push_back({table.key(i), cosine});
  }
  const auto by_rank = [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.key < b.key;
  };
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    by_rank);
  all.resize(keep);
  return all;
}

const Candidate* CandidateSet::Find(std::string_view text) const {
  for (const auto& c : candidates) {
    if (c.text == text) return &c;
  }
  return nullptr;
}

void ParaphraseProviders::AddRules(const RuleFile& file, std::string name) {
  AddRules(file.rules, std::move(name));
  stats_.back().skipped_lines = file.skipped_lines;
}

void ParaphraseProviders::AddRules(std::vector<ParaphraseRule> rules, std::string name) {
  stats_.push_back({std::move(name), rules.size(), 0});
  for (auto& rule : rules) {
    auto& bucket = by_source_[rule.source];
    bucket.push_back(std::move(rule));
  }
}

void ParaphraseProviders::SetEmbeddings(EmbeddingTable table, std::string name) {
  stats_.push_back({std::move(name), table.size(), 0});
  embeddings_ = std::move(table);
}

std::span<const ParaphraseRule> ParaphraseProviders::RulesFor(std::string_view source) const {
  const auto it = by_source_.find(std::string(source));
  if (it == by_source_.end()) return {};
  return it->second;
}

CandidateSet CandidatesFor(std::string_view target_lemma, Pos pos,
                           const ParaphraseProviders& providers, std::size_t k_embed) {
  if (providers.empty()) throw Error(ErrorCode::kNoProviders, "no paraphrase providers loaded");
  CandidateSet out;
  out.target_lemma = detail::NormalizePhrase(target_lemma);

  std::map<std::string, Candidate> merged;
  auto merge = [&](const std::string& text, double score, Origin origin) {
    if (text.empty() || text == out.target_lemma) return;
    auto [it, inserted] = merged.try_emplace(text, Candidate{text, score, OriginSet(origin)});
    if (!inserted) {
      it->second.best_score = std::max(it->second.best_score, score);
      it->second.origins.Add(origin);
    }
  };

  for (const auto& rule : providers.RulesFor(out.target_lemma)) {
    if (rule.origin == Origin::kSynlex && pos != Pos::kOther && rule.pos != pos) continue;
    merge(rule.target, rule.score, rule.origin);
  }
  if (const auto* table = providers.embeddings()) {
    for (const auto& n : EmbedNeighbors(*table, EmbeddingKey(out.target_lemma), k_embed)) {
      merge(detail::NormalizePhrase(n.key), (n.cosine + 1.0) / 2.0, Origin::kEmbed);
    }
  }

  out.candidates.reserve(merged.size());
  for (auto& [text, cand] : merged) out.candidates.push_back(std::move(cand));
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.best_score != b.best_score) return a.best_score > b.best_score;
                     return a.text < b.text;
                   });
  return out;
}

std::size_t FrequencyList::Load(const std::string& path) {
  auto in = detail::OpenOrThrow(path);
  std::size_t skipped = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::IsSkippable(line)) continue;
    const auto fields = detail::Split(line, "\t");
    const auto count = fields.size() == 2 ? detail::ParseDouble(fields[1]) : std::nullopt;
    if (!count || !std::isfinite(*count) || *count < 0.0) {
      ++skipped;
      continue;
    }
    Add(fields[0], *count);
  }
  return skipped;
}

void FrequencyList::Add(std::string_view token, double count) {
  std::string key = detail::NormalizePhrase(token);
  if (!key.empty()) counts_.emplace(std::move(key), count);
}

double FrequencyList::LogFrequency(std::string_view token) const {
  const auto it = counts_.find(detail::NormalizePhrase(token));
  if (it == counts_.end() || it->second <= 0.0) return 0.0;
  return std::log10(it->second);
}

std::size_t PhraseSet::Load(const std::string& path) {
  auto in = detail::OpenOrThrow(path);
  std::string line;
  while (std::getline(in, line)) {
    if (detail::IsSkippable(line)) continue;
    Add(line);
  }
  return 0;
}

void PhraseSet::Add(std::string_view phrase) {
  std::string key = detail::NormalizePhrase(phrase);
  if (key.empty()) return;
  const auto words = static_cast<std::size_t>(std::count(key.begin(), key.end(), ' ')) + 1;
  max_words_ = std::max(max_words_, words);
  phrases_.insert(std::move(key));
}

bool PhraseSet::Contains(std::string_view phrase) const {
  return phrases_.contains(detail::NormalizePhrase(phrase));
}

}  // namespace adaptpara

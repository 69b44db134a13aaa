#include "adaptpara/lm.hpp"

#include <cmath>
#include <fstream>

#include "adaptpara/error.hpp"
#include "adaptpara/text.hpp"
#include "adaptpara/unicode.hpp"
#include "io_util.hpp"

namespace adaptpara {

namespace {

std::string JoinKey(std::span<const std::string> tokens) {
  std::string key;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) key.push_back('\x1f');
    key.append(tokens[i]);
  }
  return key;
}

std::vector<std::string> PadLeft(std::span<const std::string> tokens, int order) {
  std::vector<std::string> padded(static_cast<std::size_t>(order - 1),
                                  std::string(kSentenceStart));
  for (const auto& t : tokens) padded.push_back(unicode::ToLower(t));
  return padded;
}

}  // namespace

NgramLanguageModel NgramLanguageModel::Build(const std::string& corpus_path, int order) {
  auto in = detail::OpenOrThrow(corpus_path);
  std::vector<std::vector<std::string>> sentences;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = TokenizeSurfaces(line);
    if (!tokens.empty()) sentences.push_back(std::move(tokens));
  }
  if (sentences.empty()) throw Error(ErrorCode::kEmptyCorpus, corpus_path + " has no tokens");
  return FromSentences(sentences, order);
}

NgramLanguageModel NgramLanguageModel::FromSentences(
    const std::vector<std::vector<std::string>>& sentences, int order) {
  if (order < 1) throw Error(ErrorCode::kConfigError, "n-gram order must be >= 1");
  NgramLanguageModel lm;
  lm.order_ = order;
  lm.vocab_.emplace(kSentenceStart);
  lm.vocab_.emplace(kSentenceEnd);
  bool any = false;
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    any = true;
    lm.AddSentence(s);
  }
  if (!any) throw Error(ErrorCode::kEmptyCorpus, "corpus has no tokens");
  return lm;
}

void NgramLanguageModel::AddSentence(const std::vector<std::string>& tokens) {
  auto padded = PadLeft(tokens, order_);
  padded.emplace_back(kSentenceEnd);
  const auto first = static_cast<std::size_t>(order_ - 1);
  const std::span<const std::string> all(padded);
  for (std::size_t i = first; i < padded.size(); ++i) {
    vocab_.insert(padded[i]);
    ++total_unigrams_;
    for (std::size_t n = 1; n <= static_cast<std::size_t>(order_); ++n) {
      const std::size_t begin = i + 1 - n;
      ++counts_[JoinKey(all.subspan(begin, n))];
      ++history_counts_[JoinKey(all.subspan(begin, n - 1))];
    }
  }
}

std::size_t NgramLanguageModel::Count(std::span<const std::string> ngram) const {
  const auto it = counts_.find(JoinKey(ngram));
  return it == counts_.end() ? 0 : it->second;
}

std::size_t NgramLanguageModel::HistoryCount(std::span<const std::string> history) const {
  const auto it = history_counts_.find(JoinKey(history));
  return it == history_counts_.end() ? 0 : it->second;
}

double NgramLanguageModel::LogProb(std::span<const std::string> tokens) const {
  const auto padded = PadLeft(tokens, order_);
  const std::span<const std::string> all(padded);
  const auto v = static_cast<double>(vocab_.size());
  const auto hist_len = static_cast<std::size_t>(order_ - 1);
  double total = 0.0;
  for (std::size_t i = hist_len; i < padded.size(); ++i) {
    const auto ngram = all.subspan(i - hist_len, hist_len + 1);
    const auto history = ngram.first(hist_len);
    const double num = static_cast<double>(Count(ngram)) + 1.0;
    const double den = static_cast<double>(HistoryCount(history)) + v;
    total += std::log10(num / den);
  }
  return total;
}

}  // namespace adaptpara

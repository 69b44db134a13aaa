#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace adaptpara {

inline constexpr std::string_view kSentenceStart = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";

// Add-one smoothed n-gram model over lowercased tokens:
//   P(w | h) = (c(h, w) + 1) / (c(h) + V)
// where c(h) counts h as a history (occurrences followed by a token) and V
// includes the <s> and </s> markers.
class NgramLanguageModel {
 public:
  // One sentence per line; tokens follow the segmenter's rules.
  static NgramLanguageModel Build(const std::string& corpus_path, int order = 3);
  static NgramLanguageModel FromSentences(
      const std::vector<std::vector<std::string>>& sentences, int order = 3);

  int order() const { return order_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  std::size_t total_unigrams() const { return total_unigrams_; }

  std::size_t Count(std::span<const std::string> ngram) const;
  std::size_t HistoryCount(std::span<const std::string> history) const;

  // Sum of log10 P(w_i | previous order-1 tokens), with <s> padding on the
  // left and no end marker. Tokens are lowercased first.
  double LogProb(std::span<const std::string> tokens) const;

 private:
  NgramLanguageModel() = default;
  void AddSentence(const std::vector<std::string>& tokens);

  int order_ = 3;
  std::unordered_map<std::string, std::size_t> counts_;
  std::unordered_map<std::string, std::size_t> history_counts_;
  std::unordered_set<std::string> vocab_;
  std::size_t total_unigrams_ = 0;
};

}  // namespace adaptpara

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "adaptpara/text.hpp"

namespace adaptpara {

enum class Origin : std::uint8_t { kPpdb = 0, kSynlex = 1, kDt = 2, kEmbed = 3 };
inline constexpr std::size_t kNumOrigins = 4;

std::string_view OriginName(Origin origin);
std::optional<Origin> ParseOrigin(std::string_view name);

class OriginSet {
 public:
  OriginSet() = default;
  explicit OriginSet(Origin origin) { Add(origin); }

  void Add(Origin origin) { bits_ |= Bit(origin); }
  void Merge(OriginSet other) { bits_ |= other.bits_; }
  bool Has(Origin origin) const { return (bits_ & Bit(origin)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::vector<Origin> members() const;

  friend bool operator==(OriginSet, OriginSet) = default;

 private:
  static std::uint8_t Bit(Origin o) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(o)); }
  std::uint8_t bits_ = 0;
};

struct ParaphraseRule {
  std::string source;  // normalized: lowercase, single spaces
  std::string target;
  double score = 0.0;  // in [0, 1] after per-file normalization
  Origin origin = Origin::kPpdb;
  std::optional<Pos> pos;  // synonym lexicon entries only
  std::string entailment;  // PPDB entailment relation, carried but unused for ranking

  friend bool operator==(const ParaphraseRule&, const ParaphraseRule&) = default;
};

struct RuleFile {
  std::vector<ParaphraseRule> rules;
  std::size_t skipped_lines = 0;
};

// PPDB-style: LHS ||| phrase ||| paraphrase ||| features ||| alignment ||| entailment.
// The PPDB2.0Score feature is min-max normalized over the file.
RuleFile LoadPpdb(const std::string& path);
// lemma<TAB>pos<TAB>syn1,syn2,...; every rule scores 1.0.
RuleFile LoadSynlex(const std::string& path);
// word<TAB>neighbor<TAB>score; scores min-max normalized over the file.
RuleFile LoadDt(const std::string& path);

// Maps raw scores to [0,1]; all become 1.0 when min == max.
void MinMaxNormalize(std::vector<ParaphraseRule>& rules);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  // Keys are lowercased; a key already present keeps its first vector.
  // Returns false for a duplicate. Throws on wrong length or non-finite values.
  bool Add(std::string_view key, std::span<const double> vector);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  const std::string& key(std::size_t i) const { return keys_[i]; }
  std::span<const double> vector(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::optional<std::size_t> Find(std::string_view key) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> keys_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Text format: "count dim" header, then "token v1 ... v_dim" rows. Phrases
// use '_' between words.
EmbeddingTable LoadEmbeddings(const std::string& path);

struct Neighbor {
  std::string key;
  double cosine = 0.0;
};

// Exhaustive cosine scan. Excludes the query, sorts by cosine descending
// with lexicographic ties, returns at most k. Unknown queries give {}.
std::vector<Neighbor> EmbedNeighbors(const EmbeddingTable& table, std::string_view query,
                                     std::size_t k);

// Underscore-joined embedding key of a (possibly multiword) lemma.
std::string EmbeddingKey(std::string_view lemma);

struct Candidate {
  std::string text;
  double best_score = 0.0;
  OriginSet origins;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct CandidateSet {
  std::string target_lemma;
  std::vector<Candidate> candidates;  // score desc, then lexicographic

  const Candidate* Find(std::string_view text) const;
  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

struct ProviderStats {
  std::string name;
  std::size_t rules = 0;
  std::size_t skipped_lines = 0;
};

// The loaded paraphrase resources, indexed by normalized source lemma.
class ParaphraseProviders {
 public:
  void AddRules(const RuleFile& file, std::string name);
  void AddRules(std::vector<ParaphraseRule> rules, std::string name);
  void SetEmbeddings(EmbeddingTable table, std::string name = "EMBED");

  bool empty() const { return stats_.empty(); }
  const std::vector<ProviderStats>& stats() const { return stats_; }
  const EmbeddingTable* embeddings() const {
    return embeddings_ ? &*embeddings_ : nullptr;
  }
  std::span<const ParaphraseRule> RulesFor(std::string_view source) const;

 private:
  std::unordered_map<std::string, std::vector<ParaphraseRule>> by_source_;
  std::optional<EmbeddingTable> embeddings_;
  std::vector<ProviderStats> stats_;
};

// Union of every provider's candidates for a lemma. Synonym-lexicon rules
// are filtered by POS unless the target POS is OTHER.
CandidateSet CandidatesFor(std::string_view target_lemma, Pos pos,
                           const ParaphraseProviders& providers, std::size_t k_embed = 10);

// token<TAB>count, keys normalized like phrases.
class FrequencyList {
 public:
  std::size_t Load(const std::string& path);
  void Add(std::string_view token, double count);
  // log10(count), or 0 when absent.
  double LogFrequency(std::string_view token) const;
  std::size_t size() const { return counts_.size(); }

 private:
  std::unordered_map<std::string, double> counts_;
};

// One lemma or underscore-joined phrase per line (seed targets, MWE lexicon).
class PhraseSet {
 public:
  std::size_t Load(const std::string& path);
  void Add(std::string_view phrase);
  bool Contains(std::string_view phrase) const;
  std::size_t size() const { return phrases_.size(); }
  // Longest entry in words.
  std::size_t max_words() const { return max_words_; }

 private:
  std::unordered_set<std::string> phrases_;
  std::size_t max_words_ = 0;
};

}  // namespace adaptpara

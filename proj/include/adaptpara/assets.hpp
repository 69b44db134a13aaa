#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adaptpara/config.hpp"
#include "adaptpara/lm.hpp"
#include "adaptpara/resources.hpp"
#include "adaptpara/text.hpp"

namespace adaptpara {

// Everything the engine reads but never mutates after startup: lexicons,
// paraphrase providers, the background language model and word lists.
// Safe for concurrent reads once built.
struct Assets {
  Lexicons lexicons;
  ParaphraseProviders providers;
  std::optional<NgramLanguageModel> lm;
  FrequencyList frequencies;
  PhraseSet mwe_lexicon;
  PhraseSet seed_targets;
  SegmentOptions segment;
  std::size_t k_embed = 10;
  std::size_t display_cap = 10;

  // Loads every path set in `config`; unset paths leave that part empty.
  static Assets Load(const Config& config);

  AnnotatedText SegmentText(std::string_view text, std::string doc_id) const {
    return Segment(text, std::move(doc_id), lexicons, segment);
  }
};

}  // namespace adaptpara

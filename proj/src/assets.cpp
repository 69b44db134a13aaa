#include "adaptpara/assets.hpp"

namespace adaptpara {

Assets Assets::Load(const Config& config) {
  Assets assets;
  assets.segment.max_chars = config.max_text_chars;
  assets.k_embed = config.k_embed;
  assets.display_cap = config.display_cap;

  if (!config.lemma_lexicon_path.empty()) assets.lexicons.lemmas.Load(config.lemma_lexicon_path);
  if (!config.pos_lexicon_path.empty()) assets.lexicons.tags.Load(config.pos_lexicon_path);
  if (!config.ppdb_path.empty()) assets.providers.AddRules(LoadPpdb(config.ppdb_path), "PPDB");
  if (!config.synlex_path.empty()) {
    assets.providers.AddRules(LoadSynlex(config.synlex_path), "SYNLEX");
  }
  if (!config.dt_path.empty()) assets.providers.AddRules(LoadDt(config.dt_path), "DT");
  if (!config.embeddings_path.empty()) {
    assets.providers.SetEmbeddings(LoadEmbeddings(config.embeddings_path));
  }
  if (!config.lm_corpus_path.empty()) {
    assets.lm = NgramLanguageModel::Build(config.lm_corpus_path, config.lm_order);
  }
  if (!config.frequency_path.empty()) assets.frequencies.Load(config.frequency_path);
  if (!config.mwe_lexicon_path.empty()) assets.mwe_lexicon.Load(config.mwe_lexicon_path);
  if (!config.seed_lexicon_path.empty()) assets.seed_targets.Load(config.seed_lexicon_path);
  return assets;
}

}  // namespace adaptpara

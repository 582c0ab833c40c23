#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prokd/corpus/corpus.hpp"
#include "prokd/corpus/label_scheme.hpp"

namespace prokd::corpus {

// A surface token whose majority tag differs between the two languages. In
// the source it takes `source_tag` with probability `source_rate` and
// `target_tag` otherwise; in the target the roles are swapped.
struct ShiftEntry {
  std::string surface;
  int source_tag = 0;
  double source_rate = 0.5;
  int target_tag = 0;
  double target_rate = 0.5;
};

// Parameters of the synthetic bilingual corpus.
//
// The source lexicon (`vocabulary_size` words) is split into function words
// and per-type entity words. Sentences instantiate one of `num_templates`
// fixed patterns of function words, entity slots and type cue words. The
// target language reuses the templates but renames a fraction of the lexicon
// through a seeded bijective cipher; shift-table tokens keep their surface
// form in both languages.
struct SyntheticSpec {
  std::size_t vocabulary_size = 400;
  std::size_t num_templates = 30;
  std::size_t source_train = 2000;
  std::size_t source_dev = 400;
  std::size_t source_test = 400;
  std::size_t target_train = 2000;
  std::size_t target_test = 400;
  // Probability that a template position is an entity slot.
  double entity_density = 0.3;
  // Share of the lexicon used as function words.
  double function_word_fraction = 0.25;
  // Cue words reserved per entity type, and how often an entity slot is cued.
  std::size_t cues_per_type = 3;
  double cue_rate = 0.8;
  std::size_t min_template_length = 6;
  std::size_t max_template_length = 14;
  // Fractions of function / entity words renamed in the target language.
  // Both zero gives the identity cipher.
  double function_cipher_rate = 1.0;
  double entity_cipher_rate = 0.5;
  std::uint64_t cipher_seed = 7;
  std::vector<ShiftEntry> shift_table;
  // Probability that a sentence carries one shift-token occurrence.
  double shift_sentence_rate = 0.25;
  std::uint64_t seed = 1;
  std::string source_language = "src";
  std::string target_language = "tgt";
};

struct SyntheticCorpora {
  Corpus source_train;
  Corpus source_dev;
  Corpus source_test;
  Corpus target_train;       // unlabeled
  Corpus target_train_gold;  // same sentences with labels, evaluation only
  Corpus target_test;        // labeled, evaluation only
};

// Deterministic in the spec (same spec -> identical corpora).
SyntheticCorpora generate_synthetic(const SyntheticSpec& spec, const LabelScheme& scheme);

// Surface form of source-lexicon word `index` in the given language; exposed
// for tests of the cipher.
std::vector<std::string> lexicon(const SyntheticSpec& spec, const LabelScheme& scheme, bool target);

}  // namespace prokd::corpus

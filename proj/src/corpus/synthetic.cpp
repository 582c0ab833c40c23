#include "prokd/corpus/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <random>

#include "prokd/corpus/batching.hpp"
#include "prokd/error.hpp"

namespace prokd::corpus {

namespace {

enum class SlotKind { function, cue, entity };

struct Slot {
  SlotKind kind;
  std::size_t word = 0;    // function word index (function slots)
  std::size_t type = 0;    // entity type (entity slots)
  std::size_t length = 1;  // entity length (entity slots)
};

using Template = std::vector<Slot>;

struct Lexicon {
  std::size_t function_words = 0;
  std::size_t cue_words = 0;  // the first cue_words function words are cues
  std::vector<std::vector<std::size_t>> entity_words;  // per type, lexicon indices
  std::vector<std::string> source;                     // surface by lexicon index
  std::vector<std::string> target;
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

void check_spec(const SyntheticSpec& spec, const LabelScheme& scheme) {
  auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!rate_ok(spec.entity_density) || !rate_ok(spec.cue_rate) || !rate_ok(spec.function_cipher_rate) ||
      !rate_ok(spec.entity_cipher_rate) || !rate_ok(spec.shift_sentence_rate) ||
      !(spec.function_word_fraction > 0.0 && spec.function_word_fraction < 1.0))
    throw Error("corpus", "synthetic spec rates must lie in [0,1]");
  if (spec.num_templates == 0 || spec.min_template_length < 2 ||
      spec.max_template_length < spec.min_template_length)
    throw Error("corpus", "synthetic spec needs templates of length >= 2");
  const std::size_t types = scheme.entity_types().size();
  const auto fws = static_cast<std::size_t>(static_cast<double>(spec.vocabulary_size) * spec.function_word_fraction);
  if (fws < spec.cues_per_type * types + 2 || spec.vocabulary_size < fws + 2 * types)
    throw Error("corpus", "vocabulary of " + std::to_string(spec.vocabulary_size) +
                              " words is too small for the templates (needs cue, function and entity words)");
  for (const auto& e : spec.shift_table) {
    if (e.surface.empty()) throw Error("corpus", "shift token with empty surface");
    if (!(e.source_rate > 0.0 && e.source_rate < 1.0) || !(e.target_rate > 0.0 && e.target_rate < 1.0))
      throw Error("corpus", "shift rates must lie in (0,1) for '" + e.surface + "'");
    if (e.source_tag <= 0 || e.target_tag <= 0 || static_cast<std::size_t>(e.source_tag) >= scheme.size() ||
        static_cast<std::size_t>(e.target_tag) >= scheme.size())
      throw Error("corpus", "shift token '" + e.surface + "' must map to entity tags");
  }
}

Lexicon build_lexicon(const SyntheticSpec& spec, const LabelScheme& scheme) {
  const std::size_t types = scheme.entity_types().size();
  Lexicon lex;
  lex.function_words =
      static_cast<std::size_t>(static_cast<double>(spec.vocabulary_size) * spec.function_word_fraction);
  lex.cue_words = spec.cues_per_type * types;
  lex.entity_words.resize(types);
  lex.source.resize(spec.vocabulary_size);
  for (std::size_t i = 0; i < lex.function_words; ++i) lex.source[i] = "f" + std::to_string(i);
  for (std::size_t i = lex.function_words; i < spec.vocabulary_size; ++i) {
    const std::size_t k = i - lex.function_words;
    const std::size_t t = k % types;
    lex.entity_words[t].push_back(i);
    lex.source[i] = lower(scheme.entity_types()[t]) + std::to_string(k / types);
  }

  std::mt19937_64 rng(derive_seed(spec.cipher_seed, 0x63697068ULL));
  std::vector<std::size_t> perm(spec.vocabulary_size);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  lex.target.resize(spec.vocabulary_size);
  for (std::size_t i = 0; i < spec.vocabulary_size; ++i) {
    const double rate = i < lex.function_words ? spec.function_cipher_rate : spec.entity_cipher_rate;
    const bool ciphered = uniform01(rng) < rate;
    lex.target[i] = ciphered ? "x" + std::to_string(perm[i]) : lex.source[i];
  }
  return lex;
}

std::vector<Template> build_templates(const SyntheticSpec& spec, const Lexicon& lex, std::size_t types) {
  std::mt19937_64 rng(derive_seed(spec.seed, 0x74656d70ULL));
  std::vector<Template> templates;
  const std::size_t generic = lex.function_words - lex.cue_words;
  for (std::size_t t = 0; t < spec.num_templates; ++t) {
    const std::size_t len =
        std::uniform_int_distribution<std::size_t>(spec.min_template_length, spec.max_template_length)(rng);
    Template tpl;
    std::size_t pos = 0;
    bool has_entity = false;
    while (pos < len) {
      const bool prev_entity = !tpl.empty() && tpl.back().kind == SlotKind::entity;
      const bool force = t == 0 && !has_entity && pos + 1 >= len / 2;
      if (!prev_entity && (force || uniform01(rng) < spec.entity_density)) {
        Slot s{SlotKind::entity};
        s.type = pick(rng, types);
        const double r = uniform01(rng);
        s.length = r < 0.5 ? 1 : (r < 0.85 ? 2 : 3);
        if (!tpl.empty() && tpl.back().kind == SlotKind::function && uniform01(rng) < spec.cue_rate)
          tpl.back().kind = SlotKind::cue;
        tpl.push_back(s);
        pos += s.length;
        has_entity = true;
      } else {
        Slot s{SlotKind::function};
        s.word = lex.cue_words + pick(rng, generic);
        tpl.push_back(s);
        ++pos;
      }
    }
    templates.push_back(std::move(tpl));
  }
  return templates;
}

struct Generator {
  const SyntheticSpec& spec;
  const LabelScheme& scheme;
  const Lexicon& lex;
  const std::vector<Template>& templates;
  std::vector<std::size_t> with_entities;

  Sentence sentence(std::mt19937_64& rng, bool target) const {
    const auto& surface = target ? lex.target : lex.source;
    std::size_t ti = pick(rng, templates.size());
    Template tpl = templates[ti];

    // Optional shift-token occurrence: choose its tag by the language's rate
    // and realize it inside an entity slot of the matching type.
    const ShiftEntry* shift = nullptr;
    int shift_tag = 0;
    std::size_t shift_slot = 0;
    if (!spec.shift_table.empty() && uniform01(rng) < spec.shift_sentence_rate) {
      shift = &spec.shift_table[pick(rng, spec.shift_table.size())];
      const double rate = target ? shift->target_rate : shift->source_rate;
      const int major = target ? shift->target_tag : shift->source_tag;
      const int minor = target ? shift->source_tag : shift->target_tag;
      shift_tag = uniform01(rng) < rate ? major : minor;
      tpl = templates[with_entities[pick(rng, with_entities.size())]];
      std::vector<std::size_t> slots;
      for (std::size_t i = 0; i < tpl.size(); ++i)
        if (tpl[i].kind == SlotKind::entity) slots.push_back(i);
      shift_slot = slots[pick(rng, slots.size())];
      Slot& s = tpl[shift_slot];
      s.type = scheme.type_of(shift_tag);
      if (scheme.is_inside(shift_tag)) s.length = std::max<std::size_t>(2, s.length);
    }

    Sentence out;
    out.language = target ? spec.target_language : spec.source_language;
    for (std::size_t i = 0; i < tpl.size(); ++i) {
      const Slot& s = tpl[i];
      switch (s.kind) {
        case SlotKind::function:
          out.tokens.push_back(surface[s.word]);
          out.labels.push_back(LabelScheme::outside);
          break;
        case SlotKind::cue: {
          const std::size_t next_type = tpl[i + 1].type;
          const std::size_t cue = next_type * spec.cues_per_type + pick(rng, spec.cues_per_type);
          out.tokens.push_back(surface[cue]);
          out.labels.push_back(LabelScheme::outside);
          break;
        }
        case SlotKind::entity: {
          const auto& words = lex.entity_words[s.type];
          for (std::size_t k = 0; k < s.length; ++k) {
            out.tokens.push_back(surface[words[pick(rng, words.size())]]);
            out.labels.push_back(k == 0 ? scheme.begin_of(s.type) : scheme.inside_of(s.type));
          }
          if (shift && i == shift_slot) {
            const std::size_t at = scheme.is_begin(shift_tag) ? out.tokens.size() - s.length : out.tokens.size() - 1;
            out.tokens[at] = shift->surface;
          }
          break;
        }
      }
    }
    return out;
  }

  Corpus corpus(std::size_t count, std::uint64_t stream, bool target, Split split) const {
    std::mt19937_64 rng(derive_seed(spec.seed, stream));
    Corpus c;
    c.language = target ? spec.target_language : spec.source_language;
    c.split = split;
    c.sentences.reserve(count);
    for (std::size_t i = 0; i < count; ++i) c.sentences.push_back(sentence(rng, target));
    return c;
  }
};

}  // namespace

std::vector<std::string> lexicon(const SyntheticSpec& spec, const LabelScheme& scheme, bool target) {
  check_spec(spec, scheme);
  Lexicon lex = build_lexicon(spec, scheme);
  return target ? lex.target : lex.source;
}

SyntheticCorpora generate_synthetic(const SyntheticSpec& spec, const LabelScheme& scheme) {
  check_spec(spec, scheme);
  const Lexicon lex = build_lexicon(spec, scheme);
  const auto templates = build_templates(spec, lex, scheme.entity_types().size());
  Generator gen{spec, scheme, lex, templates, {}};
  for (std::size_t i = 0; i < templates.size(); ++i)
    if (std::any_of(templates[i].begin(), templates[i].end(),
                    [](const Slot& s) { return s.kind == SlotKind::entity; }))
      gen.with_entities.push_back(i);

  SyntheticCorpora out;
  out.source_train = gen.corpus(spec.source_train, 10, false, Split::train);
  out.source_dev = gen.corpus(spec.source_dev, 11, false, Split::dev);
  out.source_test = gen.corpus(spec.source_test, 12, false, Split::test);
  out.target_train_gold = gen.corpus(spec.target_train, 20, true, Split::train);
  // Test splits share a stream: with the identity cipher and no shift table the
  // target test set is the source test set.
  out.target_test = gen.corpus(spec.target_test, 12, true, Split::test);
  out.target_train = out.target_train_gold.without_labels();
  return out;
}

}  // namespace prokd::corpus

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "prokd/corpus/corpus.hpp"
#include "prokd/corpus/label_scheme.hpp"
#include "prokd/diffcore/tensor.hpp"
#include "prokd/model/ner_model.hpp"
#include "prokd/model/vocabulary.hpp"

namespace prokd::testing {

using diff::Tensor;

inline Tensor random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t m, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t = Tensor::matrix(n, m);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// Rows drawn from a softmax of random logits, so strictly positive.
inline Tensor random_distributions(std::mt19937_64& rng, std::size_t n, std::size_t m, double spread = 2.0) {
  Tensor t = random_matrix(rng, n, m, -spread, spread);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (auto& v : t.row(i)) s += (v = std::exp(v));
    for (auto& v : t.row(i)) v /= s;
  }
  return t;
}

inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t m) {
  const auto t = random_distributions(rng, 1, m);
  return {t.values().begin(), t.values().end()};
}

inline corpus::Sentence sentence(std::vector<std::string> tokens, std::vector<int> labels = {},
                                 std::string language = "src") {
  return {std::move(tokens), std::move(language), std::move(labels)};
}

// Labeled sentences over a small vocabulary with every tag of a one-type
// scheme (O, B-PER, I-PER) present.
inline corpus::Corpus toy_corpus(std::uint64_t seed, std::size_t sentences, const std::string& language = "src",
                                 bool labeled = true) {
  std::mt19937_64 rng(seed);
  const std::vector<std::string> outside{"the", "a", "of", "in", "runs"};
  const std::vector<std::string> names{"ann", "bob", "cy"};
  corpus::Corpus c;
  c.language = language;
  for (std::size_t s = 0; s < sentences; ++s) {
    corpus::Sentence sent;
    sent.language = language;
    const std::size_t len = 3 + rng() % 4;
    const std::size_t ent = rng() % (len - 1);
    for (std::size_t i = 0; i < len; ++i) {
      if (i == ent || i == ent + 1) {
        sent.tokens.push_back(names[rng() % names.size()]);
        sent.labels.push_back(i == ent ? 1 : 2);
      } else {
        sent.tokens.push_back(outside[rng() % outside.size()]);
        sent.labels.push_back(0);
      }
    }
    if (!labeled) sent.labels.clear();
    c.sentences.push_back(std::move(sent));
  }
  return c;
}

inline model::NerModel toy_model(const corpus::Corpus& c, std::uint64_t seed, std::size_t tags = 3,
                                 std::size_t embed = 4, std::size_t hidden = 5) {
  model::EncoderConfig cfg;
  cfg.embedding_dim = embed;
  cfg.hidden_dim = hidden;
  cfg.window_radius = 1;
  cfg.dropout = 0.0;
  cfg.seed = seed;
  cfg.num_tags = tags;
  return model::NerModel(cfg, model::Vocabulary::from_corpora({&c}));
}

// Fresh empty directory under the system temp path.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("prokd-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace prokd::testing

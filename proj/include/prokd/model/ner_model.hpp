#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prokd/corpus/corpus.hpp"
#include "prokd/diffcore/graph.hpp"
#include "prokd/model/vocabulary.hpp"

namespace prokd::model {

struct EncoderConfig {
  std::size_t embedding_dim = 32;
  std::size_t hidden_dim = 64;
  std::size_t window_radius = 2;
  double dropout = 0.5;
  bool freeze_embeddings = false;
  std::uint64_t seed = 1;
  std::size_t num_tags = 9;
};

void validate(const EncoderConfig& cfg);

// Token tagger: embedding table, one tanh layer over a (2r+1)-token window of
// embeddings, and an affine classifier with row softmax.
class NerModel {
 public:
  NerModel(const EncoderConfig& cfg, Vocabulary vocab);

  const EncoderConfig& config() const noexcept { return cfg_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }

  diff::Parameter& embedding() noexcept { return params_[0]; }
  const diff::Parameter& embedding() const noexcept { return params_[0]; }
  std::vector<diff::Parameter*> parameters();
  std::vector<const diff::Parameter*> parameters() const;
  diff::Parameter* find(const std::string& name);

  // Window indices for every token of the sentences, concatenated: row r of
  // the result is the (2r+1) vocabulary ids centred on token r, PAD at edges.
  std::vector<std::size_t> window_indices(std::span<const corpus::Sentence* const> sentences) const;

  // Hidden vectors h_i, one row per token across all sentences in order.
  // Dropout (inverted, on the window input) applies only when `training` is
  // set and uses masks drawn from `dropout_seed`.
  diff::Var encode(diff::Graph& g, std::span<const corpus::Sentence* const> sentences, bool training,
                   std::uint64_t dropout_seed = 0);
  // Probability rows over the tag set.
  diff::Var classify(diff::Graph& g, diff::Var hidden);

  // Inference helpers (dropout off, no gradient bookkeeping kept).
  diff::Tensor hidden(const corpus::Sentence& s);
  diff::Tensor probabilities(const corpus::Sentence& s);

 private:
  EncoderConfig cfg_;
  Vocabulary vocab_;
  // embedding, encoder.weight, encoder.bias, classifier.weight, classifier.bias
  std::vector<diff::Parameter> params_;
};

}  // namespace prokd::model

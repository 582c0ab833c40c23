#include "prokd/model/ner_model.hpp"

#include <cmath>
#include <random>

#include "prokd/error.hpp"

namespace prokd::model {

using diff::Graph;
using diff::Parameter;
using diff::Tensor;
using diff::Var;

void validate(const EncoderConfig& cfg) {
  if (cfg.embedding_dim == 0 || cfg.hidden_dim == 0 || cfg.num_tags < 2)
    throw Error("model", "encoder dimensions must be positive");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw Error("model", "dropout must lie in [0,1)");
}

namespace {

Tensor uniform(std::vector<std::size_t> shape, std::size_t fan_in, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

}  // namespace

NerModel::NerModel(const EncoderConfig& cfg, Vocabulary vocab) : cfg_(cfg), vocab_(std::move(vocab)) {
  validate(cfg_);
  std::mt19937_64 rng(cfg_.seed);
  const std::size_t window = 2 * cfg_.window_radius + 1;
  const std::size_t in = window * cfg_.embedding_dim;
  params_.emplace_back("embedding", uniform({vocab_.size(), cfg_.embedding_dim}, vocab_.size(), rng),
                       cfg_.freeze_embeddings);
  params_.emplace_back("encoder.weight", uniform({in, cfg_.hidden_dim}, in, rng));
  params_.emplace_back("encoder.bias", Tensor({cfg_.hidden_dim}));
  params_.emplace_back("classifier.weight", uniform({cfg_.hidden_dim, cfg_.num_tags}, cfg_.hidden_dim, rng));
  params_.emplace_back("classifier.bias", Tensor({cfg_.num_tags}));
}

std::vector<Parameter*> NerModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> NerModel::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

Parameter* NerModel::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

std::vector<std::size_t> NerModel::window_indices(std::span<const corpus::Sentence* const> sentences) const {
  const auto r = static_cast<long>(cfg_.window_radius);
  std::vector<std::size_t> idx;
  for (const auto* s : sentences) {
    if (s->tokens.empty()) throw Error("model", "cannot encode an empty sentence");
    std::vector<std::size_t> ids;
    ids.reserve(s->size());
    for (const auto& t : s->tokens) ids.push_back(vocab_.index(t));
    const auto len = static_cast<long>(ids.size());
    for (long i = 0; i < len; ++i)
      for (long o = -r; o <= r; ++o) {
        const long p = i + o;
        idx.push_back(p >= 0 && p < len ? ids[static_cast<std::size_t>(p)] : Vocabulary::pad);
      }
  }
  return idx;
}

Var NerModel::encode(Graph& g, std::span<const corpus::Sentence* const> sentences, bool training,
                     std::uint64_t dropout_seed) {
  const std::size_t window = 2 * cfg_.window_radius + 1;
  const auto idx = window_indices(sentences);
  Var x = diff::gather_concat(g.param(params_[0]), idx, window);
  if (training && cfg_.dropout > 0.0) {
    std::mt19937_64 rng(dropout_seed);
    std::bernoulli_distribution keep(1.0 - cfg_.dropout);
    Tensor mask(x.value().shape());
    const double scale = 1.0 / (1.0 - cfg_.dropout);
    for (auto& m : mask.values()) m = keep(rng) ? scale : 0.0;
    x = diff::mul(x, mask);
  }
  return diff::tanh(diff::affine(x, g.param(params_[1]), g.param(params_[2])));
}

Var NerModel::classify(Graph& g, Var hidden) {
  if (hidden.value().cols() != cfg_.hidden_dim) throw Error("model", "classify: hidden dimension mismatch");
  return diff::softmax_rows(diff::affine(hidden, g.param(params_[3]), g.param(params_[4])));
}

Tensor NerModel::hidden(const corpus::Sentence& s) {
  Graph g;
  const corpus::Sentence* one[] = {&s};
  return encode(g, one, false).value();
}

Tensor NerModel::probabilities(const corpus::Sentence& s) {
  Graph g;
  const corpus::Sentence* one[] = {&s};
  return classify(g, encode(g, one, false)).value();
}

}  // namespace prokd::model

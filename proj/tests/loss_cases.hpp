#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prokd/diffcore/gradcheck.hpp"
#include "prokd/losses/losses.hpp"
#include "prokd/prototypes/prototype_set.hpp"
#include "support.hpp"

namespace prokd::testing {

// A scalar loss over the parameters of a small model, ready for check_gradient.
struct LossCase {
  std::string name;
  std::shared_ptr<model::NerModel> model;
  std::function<diff::Var(diff::Graph&)> build;

  diff::GradCheckResult check(double step = 1e-5) const {
    auto params = model->parameters();
    return diff::check_gradient(build, params, step);
  }
};

struct ToyBatch {
  std::shared_ptr<model::NerModel> model;
  corpus::Corpus source;
  corpus::Corpus target;
  std::vector<int> gold;
  std::vector<const corpus::Sentence*> src_ptrs;
  std::vector<const corpus::Sentence*> tgt_ptrs;
  Tensor teacher_probs;
  std::vector<int> pseudo;
  proto::PrototypeSet old_target;
};

inline std::shared_ptr<ToyBatch> toy_batch(std::uint64_t seed) {
  auto b = std::make_shared<ToyBatch>();
  b->source = toy_corpus(seed, 2, "src");
  b->target = toy_corpus(seed + 1000, 2, "tgt", false);
  corpus::Corpus both = b->source;
  for (const auto& s : b->target.sentences) both.sentences.push_back(s);
  b->model = std::make_shared<model::NerModel>(toy_model(both, seed));
  for (const auto& s : b->source.sentences) {
    b->src_ptrs.push_back(&s);
    b->gold.insert(b->gold.end(), s.labels.begin(), s.labels.end());
  }
  for (const auto& s : b->target.sentences) b->tgt_ptrs.push_back(&s);
  std::mt19937_64 rng(seed * 7 + 3);
  const std::size_t n = b->target.token_count();
  b->teacher_probs = random_distributions(rng, n, 3);
  const auto rho = random_distributions(rng, n, 3);
  b->pseudo = loss::hard_labels(loss::hybrid_labels(rho, b->teacher_probs, 0.7));
  b->old_target = proto::PrototypeSet("tgt", 3, b->model->config().hidden_dim, 0.3);
  proto::Centroids init{random_matrix(rng, 3, b->model->config().hidden_dim), {true, true, true}, {1, 1, 1}};
  b->old_target.update(init);
  return b;
}

// Gold one-hot weights for masked_mean.
inline Tensor one_hot_weights(std::span<const int> labels, std::size_t tags) {
  Tensor w = Tensor::matrix(labels.size(), tags);
  for (std::size_t i = 0; i < labels.size(); ++i) w.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  return w;
}

// Alignment through the encoder: source class means, target means weighted by
// fixed probability rows and moved by the moving average, then the
// contrastive loss.
inline diff::Var alignment_expression(diff::Graph& g, ToyBatch& b, const loss::FusionConfig& f) {
  auto& m = *b.model;
  const diff::Var hs = m.encode(g, b.src_ptrs, false);
  const diff::Var src = diff::masked_mean(hs, one_hot_weights(b.gold, 3));
  const diff::Var ht = m.encode(g, b.tgt_ptrs, false);
  const diff::Var batch = diff::masked_mean(ht, b.teacher_probs);
  const diff::Var tgt = proto::moving_average_expression(b.old_target, batch, {true, true, true});
  const std::vector<std::size_t> labels{0, 1, 2};
  return loss::class_alignment(src, tgt, labels, f);
}

inline std::vector<LossCase> loss_cases(std::uint64_t seed) {
  auto b = toy_batch(seed);
  std::vector<LossCase> out;
  auto ce = [b](diff::Graph& g) {
    return loss::teacher_ce(b->model->classify(g, b->model->encode(g, b->src_ptrs, false)), b->gold);
  };
  auto kd = [b](diff::Graph& g) {
    const auto q = b->model->classify(g, b->model->encode(g, b->tgt_ptrs, false));
    return loss::kd_mse(g.constant(b->teacher_probs), q);
  };
  auto st = [b](diff::Graph& g) {
    return loss::self_train_ce(b->model->classify(g, b->model->encode(g, b->tgt_ptrs, false)), b->pseudo);
  };
  auto ca = [b](loss::AlignmentForm form, loss::NegativeMode neg) {
    loss::FusionConfig f;
    f.tau1 = 0.5;
    f.form = form;
    f.negatives = neg;
    return [b, f](diff::Graph& g) { return alignment_expression(g, *b, f); };
  };
  using loss::AlignmentForm;
  using loss::NegativeMode;
  out.push_back({"teacher_ce", b->model, ce});
  out.push_back({"kd_mse", b->model, kd});
  out.push_back({"class_alignment per-class", b->model, ca(AlignmentForm::per_class, NegativeMode::both_languages)});
  out.push_back({"class_alignment per-class within", b->model,
                 ca(AlignmentForm::per_class, NegativeMode::within_language)});
  out.push_back({"class_alignment literal", b->model, ca(AlignmentForm::literal, NegativeMode::both_languages)});
  out.push_back({"class_alignment literal within", b->model,
                 ca(AlignmentForm::literal, NegativeMode::within_language)});
  out.push_back({"self_train_ce", b->model, st});
  out.push_back({"teacher_total", b->model, [ce, f = ca(AlignmentForm::per_class, NegativeMode::both_languages)](
                                                diff::Graph& g) { return loss::teacher_total(ce(g), f(g)); }});
  out.push_back({"student_total", b->model,
                 [st, kd](diff::Graph& g) { return loss::student_total(st(g), kd(g), 0.5); }});
  return out;
}

}  // namespace prokd::testing

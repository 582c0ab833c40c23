#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prokd/diffcore/graph.hpp"
#include "prokd/prototypes/prototype_set.hpp"

namespace prokd::loss {

using diff::Tensor;
using diff::Var;

enum class NegativeMode { within_language, both_languages };
enum class AlignmentForm { per_class, literal };

std::string to_string(NegativeMode m);
std::string to_string(AlignmentForm f);
NegativeMode negative_mode_from_string(const std::string& s);
AlignmentForm alignment_form_from_string(const std::string& s);

struct FusionConfig {
  double tau1 = 0.5;   // contrastive temperature
  double tau2 = 0.5;   // prototype softmax temperature
  double gamma = 0.7;  // fuse factor
  NegativeMode negatives = NegativeMode::both_languages;
  AlignmentForm form = AlignmentForm::per_class;
  bool exclude_outside = false;  // drop O from the alignment loss
};

void validate(const FusionConfig& f);

// Token-mean cross-entropy of probability rows against gold tags.
Var teacher_ce(Var probs, std::span<const int> gold);

// Labels that take part in alignment: initialized in both sets (and not O
// when excluded). `skipped` receives the rest.
std::vector<std::size_t> alignment_labels(const proto::PrototypeSet& source, const proto::PrototypeSet& target,
                                          bool exclude_outside, std::vector<std::size_t>* skipped = nullptr);

// Contrastive alignment between source and target prototypes (both T x d),
// restricted to `labels`. Rows are L2-normalized first. With s_ij = z_i . z_j / tau1:
//   per_class: sum_i -log( e^{s(i^s,i^t)} / (e^{s(i^s,i^t)} + N_i) )
//   literal:   -log sum_i e^{s(i^s,i^t)} / N_i
// where N_i sums e^{s} over the negatives of both anchors: other labels of the
// anchor's own language (within_language) or of both languages (both_languages).
Var class_alignment(Var source, Var target, std::span<const std::size_t> labels, const FusionConfig& f);

// Mean over rows of sum_k (p_ik - q_ik)^2.
Var kd_mse(Var teacher, Var student);

// eta = gamma * rho + (1 - gamma) * p.
std::vector<double> hybrid_label(std::span<const double> rho, std::span<const double> p, double gamma);
Tensor hybrid_labels(const Tensor& rho, const Tensor& p, double gamma);

// Argmax; ties go to the lowest tag index.
int hard_label(std::span<const double> eta);
std::vector<int> hard_labels(const Tensor& eta);

// Token-mean cross-entropy against hard pseudo-labels.
Var self_train_ce(Var student, std::span<const int> pseudo);

// alpha = 1 - (e / E_max)^2.
double alpha_schedule(std::size_t epoch, std::size_t max_epoch);

// ce + ca; ca absent when alignment is disabled or skipped.
Var teacher_total(Var ce, std::optional<Var> ca);
// (1 - alpha) * st + alpha * kd; st may be absent only when alpha == 1.
Var student_total(std::optional<Var> self_train, Var kd, double alpha);

// Per-step record of every scalar term and the weights that combined them.
struct LossBundle {
  enum class Objective { teacher, student };
  Objective objective = Objective::teacher;
  std::map<std::string, double> terms;  // ce_teacher, class_alignment, kd_mse, self_train_ce, total
  double alpha = 1.0;
  double gamma = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  std::size_t epoch = 0;
  std::size_t batch = 0;

  double term(const std::string& name) const;
  // The documented combination of the stored terms (missing terms count 0).
  double recombined_total() const;
  nlohmann::json to_json() const;
};

}  // namespace prokd::loss

#include "prokd/losses/losses.hpp"

#include <cmath>

#include "prokd/corpus/label_scheme.hpp"
#include "prokd/error.hpp"

namespace prokd::loss {

std::string to_string(NegativeMode m) {
  return m == NegativeMode::within_language ? "within-language" : "both-languages";
}

std::string to_string(AlignmentForm f) { return f == AlignmentForm::per_class ? "per-class" : "literal"; }

NegativeMode negative_mode_from_string(const std::string& s) {
  if (s == "within-language") return NegativeMode::within_language;
  if (s == "both-languages") return NegativeMode::both_languages;
  throw ConfigError("unknown negative mode '" + s + "' (within-language | both-languages)");
}

AlignmentForm alignment_form_from_string(const std::string& s) {
  if (s == "per-class") return AlignmentForm::per_class;
  if (s == "literal") return AlignmentForm::literal;
  throw ConfigError("unknown alignment form '" + s + "' (per-class | literal)");
}

void validate(const FusionConfig& f) {
  if (!(f.tau1 > 0.0) || !(f.tau2 > 0.0)) throw ConfigError("temperatures tau1 and tau2 must be positive");
  if (!(f.gamma >= 0.0 && f.gamma <= 1.0)) throw ConfigError("fuse factor gamma must lie in [0,1]");
}

Var teacher_ce(Var probs, std::span<const int> gold) { return diff::cross_entropy(probs, gold); }

std::vector<std::size_t> alignment_labels(const proto::PrototypeSet& source, const proto::PrototypeSet& target,
                                          bool exclude_outside, std::vector<std::size_t>* skipped) {
  if (source.num_tags() != target.num_tags() || source.dim() != target.dim())
    throw Error("losses", "prototype sets disagree in shape");
  std::vector<std::size_t> labels;
  for (std::size_t k = 0; k < source.num_tags(); ++k) {
    if (exclude_outside && k == static_cast<std::size_t>(corpus::LabelScheme::outside)) continue;
    if (source.initialized(k) && target.initialized(k)) labels.push_back(k);
    else if (skipped) skipped->push_back(k);
  }
  return labels;
}

Var class_alignment(Var source, Var target, std::span<const std::size_t> labels, const FusionConfig& f) {
  validate(f);
  const std::size_t m = labels.size();
  if (m < 2) throw Error("losses", "class alignment needs at least 2 initialized labels (no negatives exist)");
  if (!source.value().same_shape(target.value())) throw Error("losses", "class alignment: prototype shapes differ");
  for (std::size_t k : labels)
    if (k >= source.value().rows()) throw Error("losses", "class alignment: label index out of range");

  const Var zs = diff::l2_normalize_rows(diff::gather_concat(source, labels, 1));
  const Var zt = diff::l2_normalize_rows(diff::gather_concat(target, labels, 1));
  const double inv = 1.0 / f.tau1;
  const Var st = diff::scale(diff::matmul_nt(zs, zt), inv);

  Tensor eye = Tensor::matrix(m, m);
  Tensor off = Tensor::matrix(m, m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    eye.at(i, i) = 1.0;
    off.at(i, i) = 0.0;
  }
  auto neg_sum = [&](Var sims) { return diff::sum_rows(diff::mul(diff::exp(sims), off)); };

  const Var pos = diff::sum_rows(diff::mul(st, eye));
  Var neg = diff::add(neg_sum(diff::scale(diff::matmul_nt(zs, zs), inv)),
                      neg_sum(diff::scale(diff::matmul_nt(zt, zt), inv)));
  if (f.negatives == NegativeMode::both_languages)
    neg = diff::add(neg, diff::add(neg_sum(st), neg_sum(diff::transpose(st))));

  if (f.form == AlignmentForm::per_class)
    return diff::sum(diff::sub(diff::log(diff::add(diff::exp(pos), neg)), pos));
  return diff::scale(diff::log(diff::sum(diff::exp(diff::sub(pos, diff::log(neg))))), -1.0);
}

Var kd_mse(Var teacher, Var student) { return diff::mse(teacher, student); }

std::vector<double> hybrid_label(std::span<const double> rho, std::span<const double> p, double gamma) {
  if (rho.size() != p.size()) throw Error("losses", "hybrid label: row lengths differ");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("losses", "hybrid label: gamma must lie in [0,1]");
  std::vector<double> eta(rho.size());
  for (std::size_t k = 0; k < eta.size(); ++k) eta[k] = gamma * rho[k] + (1.0 - gamma) * p[k];
  return eta;
}

Tensor hybrid_labels(const Tensor& rho, const Tensor& p, double gamma) {
  if (!rho.same_shape(p)) throw Error("losses", "hybrid labels: shapes differ");
  Tensor out(rho.shape());
  for (std::size_t i = 0; i < rho.rows(); ++i) {
    const auto eta = hybrid_label(rho.row(i), p.row(i), gamma);
    std::copy(eta.begin(), eta.end(), out.row(i).begin());
  }
  return out;
}

int hard_label(std::span<const double> eta) {
  if (eta.empty()) throw Error("losses", "hard label of an empty row");
  std::size_t best = 0;
  for (std::size_t k = 1; k < eta.size(); ++k)
    if (eta[k] > eta[best]) best = k;
  return static_cast<int>(best);
}

std::vector<int> hard_labels(const Tensor& eta) {
  std::vector<int> out(eta.rows());
  for (std::size_t i = 0; i < eta.rows(); ++i) out[i] = hard_label(eta.row(i));
  return out;
}

Var self_train_ce(Var student, std::span<const int> pseudo) { return diff::cross_entropy(student, pseudo); }

double alpha_schedule(std::size_t epoch, std::size_t max_epoch) {
  if (max_epoch == 0) throw Error("losses", "alpha schedule needs E_max >= 1");
  if (epoch > max_epoch)
    throw Error("losses", "alpha schedule: epoch " + std::to_string(epoch) + " exceeds E_max " +
                              std::to_string(max_epoch));
  const double r = static_cast<double>(epoch) / static_cast<double>(max_epoch);
  return 1.0 - r * r;
}

Var teacher_total(Var ce, std::optional<Var> ca) { return ca ? diff::add(ce, *ca) : ce; }

Var student_total(std::optional<Var> self_train, Var kd, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("losses", "student total: alpha must lie in [0,1]");
  if (!self_train) {
    if (alpha != 1.0) throw Error("losses", "student total: self-training term missing with alpha < 1");
    return kd;
  }
  return diff::add(diff::scale(*self_train, 1.0 - alpha), diff::scale(kd, alpha));
}

double LossBundle::term(const std::string& name) const {
  auto it = terms.find(name);
  return it == terms.end() ? 0.0 : it->second;
}

double LossBundle::recombined_total() const {
  if (objective == Objective::teacher) return term("ce_teacher") + term("class_alignment");
  return (1.0 - alpha) * term("self_train_ce") + alpha * term("kd_mse");
}

nlohmann::json LossBundle::to_json() const {
  nlohmann::json j;
  j["objective"] = objective == Objective::teacher ? "teacher" : "student";
  j["epoch"] = epoch;
  j["batch"] = batch;
  j["terms"] = terms;
  j["weights"] = {{"alpha", alpha}, {"gamma", gamma}, {"tau1", tau1}, {"tau2", tau2}};
  return j;
}

}  // namespace prokd::loss

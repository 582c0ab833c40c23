#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "prokd/corpus/label_scheme.hpp"
#include "prokd/diffcore/graph.hpp"

namespace prokd::proto {

using diff::Tensor;

// Per-label centroids of one batch (or corpus pass) before averaging.
struct Centroids {
  Tensor values;              // num_tags x dim
  std::vector<bool> present;  // label observed with enough weight
  std::vector<double> weight; // token count or total probability mass
};

// Mean hidden vector of the tokens carrying each gold label. Labels absent
// from the input are reported as not present.
Centroids compute_source_prototypes(const Tensor& hidden, std::span<const int> labels, std::size_t num_tags);

// Probability-weighted mean: C_k = sum_i p_ik h_i / sum_i p_ik. Labels whose
// total weight is below `min_weight` are reported as not present.
Centroids compute_target_prototypes(const Tensor& hidden, const Tensor& probs, double min_weight = 1e-8);

// Moving-average prototypes of one language.
class PrototypeSet {
 public:
  PrototypeSet() = default;
  PrototypeSet(std::string language, std::size_t num_tags, std::size_t dim, double lambda);

  // C <- lambda * C_new + (1 - lambda) * C_old for every present label; the
  // first observation of a label sets it directly; absent labels keep their
  // old value.
  void update(const Centroids& batch);
  void reset();

  const std::string& language() const noexcept { return language_; }
  double lambda() const noexcept { return lambda_; }
  std::size_t num_tags() const noexcept { return initialized_.size(); }
  std::size_t dim() const noexcept { return centroids_.cols(); }
  bool initialized(std::size_t k) const { return initialized_.at(k); }
  bool all_initialized() const;
  std::size_t updates() const noexcept { return updates_; }
  const Tensor& centroids() const noexcept { return centroids_; }
  std::span<const double> centroid(std::size_t k) const { return centroids_.row(k); }

 private:
  std::string language_;
  double lambda_ = 0.001;
  Tensor centroids_;
  std::vector<bool> initialized_;
  std::size_t updates_ = 0;
};

// The post-update centroids as a differentiable expression of the batch
// centroids `batch` (num_tags x dim): lambda * batch + (1 - lambda) * old for
// labels present in the batch and already initialized, `batch` for labels seen
// for the first time, and the old constant otherwise.
diff::Var moving_average_expression(const PrototypeSet& old, diff::Var batch,
                                    const std::vector<bool>& present);

// rho_k = exp(-||h - C_k|| / tau2) / sum_k' exp(-||h - C_k'|| / tau2).
// Every label must be initialized.
std::vector<double> prototype_probability(std::span<const double> h, const PrototypeSet& protos, double tau2);
// Row-wise version over a matrix of hidden vectors.
Tensor prototype_probabilities(const Tensor& hidden, const PrototypeSet& protos, double tau2);

// One line per prototype or sampled token vector for external 2-D projection.
struct TokenSample {
  std::string language;
  int label;
  std::string token;
  std::vector<double> vector;
};

// "# prokd-prototypes v1", a column header "language label dim_0 ... dim_{H-1}"
// and one row per initialized prototype. Values are written in shortest
// round-trip form.
void write_prototype_tsv(std::ostream& out, std::span<const PrototypeSet* const> sets,
                         const corpus::LabelScheme& scheme);
// "# prokd-token-vectors v1", header "language label token dim_0 ...", one row
// per sample.
void write_token_sample_tsv(std::ostream& out, std::span<const TokenSample> samples,
                            const corpus::LabelScheme& scheme);

}  // namespace prokd::proto

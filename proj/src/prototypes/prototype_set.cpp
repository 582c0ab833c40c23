#include "prokd/prototypes/prototype_set.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "prokd/diffcore/kernels.hpp"
#include "prokd/error.hpp"

namespace prokd::proto {

Centroids compute_source_prototypes(const Tensor& hidden, std::span<const int> labels, std::size_t num_tags) {
  const std::size_t n = hidden.rows(), d = hidden.cols();
  if (labels.size() != n) throw Error("prototypes", "label count does not match hidden rows");
  Centroids c{Tensor::matrix(num_tags, d), std::vector<bool>(num_tags, false), std::vector<double>(num_tags, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    if (k >= num_tags) throw Error("prototypes", "label index out of range");
    c.weight[k] += 1.0;
    for (std::size_t j = 0; j < d; ++j) c.values.at(k, j) += hidden.at(i, j);
  }
  for (std::size_t k = 0; k < num_tags; ++k) {
    if (c.weight[k] == 0.0) continue;
    c.present[k] = true;
    for (std::size_t j = 0; j < d; ++j) c.values.at(k, j) /= c.weight[k];
  }
  return c;
}

Centroids compute_target_prototypes(const Tensor& hidden, const Tensor& probs, double min_weight) {
  const std::size_t n = hidden.rows(), d = hidden.cols(), t = probs.cols();
  if (probs.rows() != n) throw Error("prototypes", "probability rows do not match hidden rows");
  Centroids c{Tensor::matrix(t, d), std::vector<bool>(t, false), std::vector<double>(t, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < t; ++k) c.weight[k] += probs.at(i, k);
  for (std::size_t k = 0; k < t; ++k) {
    if (c.weight[k] < min_weight) continue;
    c.present[k] = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = probs.at(i, k);
      for (std::size_t j = 0; j < d; ++j) c.values.at(k, j) += w * hidden.at(i, j);
    }
    for (std::size_t j = 0; j < d; ++j) c.values.at(k, j) /= c.weight[k];
  }
  return c;
}

PrototypeSet::PrototypeSet(std::string language, std::size_t num_tags, std::size_t dim, double lambda)
    : language_(std::move(language)), lambda_(lambda), centroids_(Tensor::matrix(num_tags, dim)),
      initialized_(num_tags, false) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw Error("prototypes", "moving average coefficient must lie in (0,1)");
}

void PrototypeSet::update(const Centroids& batch) {
  if (batch.values.rows() != num_tags() || batch.values.cols() != dim())
    throw Error("prototypes", "centroid shape mismatch in moving-average update");
  for (std::size_t k = 0; k < num_tags(); ++k) {
    if (!batch.present[k]) continue;
    auto dst = centroids_.row(k);
    auto src = batch.values.row(k);
    if (!initialized_[k]) {
      std::copy(src.begin(), src.end(), dst.begin());
      initialized_[k] = true;
      continue;
    }
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = lambda_ * src[j] + (1.0 - lambda_) * dst[j];
  }
  ++updates_;
}

void PrototypeSet::reset() {
  centroids_.fill(0.0);
  std::fill(initialized_.begin(), initialized_.end(), false);
  updates_ = 0;
}

bool PrototypeSet::all_initialized() const {
  return std::all_of(initialized_.begin(), initialized_.end(), [](bool b) { return b; });
}

diff::Var moving_average_expression(const PrototypeSet& old, diff::Var batch,
                                    const std::vector<bool>& present) {
  const std::size_t t = old.num_tags(), d = old.dim();
  if (batch.value().rows() != t || batch.value().cols() != d || present.size() != t)
    throw Error("prototypes", "moving_average_expression: shape mismatch");
  Tensor coeff = Tensor::matrix(t, d);
  Tensor offset = Tensor::matrix(t, d);
  for (std::size_t k = 0; k < t; ++k) {
    double a = 0.0, b = 0.0;
    if (present[k]) a = old.initialized(k) ? old.lambda() : 1.0;
    if (old.initialized(k)) b = present[k] ? 1.0 - old.lambda() : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      coeff.at(k, j) = a;
      offset.at(k, j) = b * old.centroids().at(k, j);
    }
  }
  return diff::add(diff::mul(batch, coeff), offset);
}

std::vector<double> prototype_probability(std::span<const double> h, const PrototypeSet& protos, double tau2) {
  Tensor row({1, h.size()}, std::vector<double>(h.begin(), h.end()));
  const Tensor p = prototype_probabilities(row, protos, tau2);
  return p.values();
}

Tensor prototype_probabilities(const Tensor& hidden, const PrototypeSet& protos, double tau2) {
  if (!(tau2 > 0.0)) throw Error("prototypes", "temperature tau2 must be positive");
  if (!protos.all_initialized())
    throw Error("prototypes", "prototype probability requested before every label prototype exists");
  const std::size_t n = hidden.rows(), t = protos.num_tags(), d = protos.dim();
  if (hidden.cols() != d) throw Error("prototypes", "hidden dimension does not match prototypes");
  Tensor dist = Tensor::matrix(n, t);
  kernels::pairwise_distance(hidden.data(), protos.centroids().data(), dist.data(), n, t, d);
  for (auto& v : dist.values()) v = -v / tau2;
  Tensor out = Tensor::matrix(n, t);
  kernels::softmax_rows(dist.data(), out.data(), n, t);
  return out;
}

namespace {
void put_double(std::ostream& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}


void write_vector(std::ostream& out, std::span<const double> v) {
  for (double x : v) {
    out << '\t';
    put_double(out, x);
  }
  out << '\n';
}

}  // namespace

void write_prototype_tsv(std::ostream& out, std::span<const PrototypeSet* const> sets,
                         const corpus::LabelScheme& scheme) {
  const std::size_t dim = sets.empty() ? 0 : sets.front()->dim();
  out << "# prokd-prototypes v1\nlanguage\tlabel";
  for (std::size_t j = 0; j < dim; ++j) out << "\tdim_" << j;
  out << '\n';
  for (const auto* set : sets) {
    if (set->dim() != dim) throw Error("prototypes", "prototype sets of different dimension");
    for (std::size_t k = 0; k < set->num_tags(); ++k) {
      if (!set->initialized(k)) continue;
      out << set->language() << '\t' << scheme.tag(static_cast<int>(k));
      write_vector(out, set->centroid(k));
    }
  }
}

void write_token_sample_tsv(std::ostream& out, std::span<const TokenSample> samples,
                            const corpus::LabelScheme& scheme) {
  const std::size_t dim = samples.empty() ? 0 : samples.front().vector.size();
  out << "# prokd-token-vectors v1\nlanguage\tlabel\ttoken";
  for (std::size_t j = 0; j < dim; ++j) out << "\tdim_" << j;
  out << '\n';
  for (const auto& s : samples) {
    if (s.vector.size() != dim) throw Error("prototypes", "token sample of wrong dimension");
    out << s.language << '\t' << scheme.tag(s.label) << '\t' << s.token;
    write_vector(out, s.vector);
  }
}

}  // namespace prokd::proto

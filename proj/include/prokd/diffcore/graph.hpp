#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "prokd/diffcore/tensor.hpp"

namespace prokd::diff {

// A named trainable tensor with its gradient slot.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Tensor v, bool is_frozen = false)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()), frozen(is_frozen) {}
};

class Graph;

// Handle to a node in a Graph. Cheap to copy; only valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Tape for reverse-mode differentiation. Nodes are appended in evaluation
// order, so a reverse sweep over the tape is a valid topological order.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor t);
  Var param(Parameter& p);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  // Gradient of the last backward() root w.r.t. v (zeros if unreached).
  const Tensor& grad(Var v) const { return nodes_[v.id()].grad; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Reverse sweep from a scalar root. Every parameter in `params` gets its
  // gradient slot overwritten; parameters not reached receive exact zeros.
  void backward(Var root, std::span<Parameter* const> params);
  void backward(Var root);

  // Primitive construction hook: records a node computed from `inputs`.
  // `back` receives the node's upstream gradient and its own forward value,
  // and accumulates into the inputs' gradients via accumulate().
  using Backward = std::function<void(Graph&, const Tensor& upstream, const Tensor& output)>;
  Var record(Tensor value, std::vector<Var> inputs, Backward back);

  // Adds `delta` into the gradient of v if v requires it.
  void accumulate(Var v, const Tensor& delta);
  Tensor& grad_slot(Var v);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    Backward back;
    Parameter* param = nullptr;
    bool requires_grad = false;
    bool grad_ready = false;
  };
  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return graph_->value(*this); }

// ---------------------------------------------------------------------------
// Primitive catalog. Shape errors throw prokd::Error naming the primitive.

// x (n x k) * w (k x m) + b (1 x m or vector m), b broadcast over rows.
Var affine(Var x, Var w, Var b);
Var matmul(Var a, Var b);
// a (n x k) * b^T with b (m x k).
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

Var tanh(Var x);
Var exp(Var x);
// Rejects non-positive entries.
Var log(Var x);
// Row-wise softmax with max subtraction.
Var softmax_rows(Var x);
// Row-wise x / ||x||. Zero rows are rejected.
Var l2_normalize_rows(Var x);
// Sum of elementwise products of equal-shape tensors (scalar).
Var dot(Var a, Var b);
// Pairwise Euclidean distances: a (n x d), b (m x d) -> n x m.
Var euclidean_distance(Var a, Var b);

// Mean over rows of the squared row difference sum_k (p_ik - q_ik)^2.
Var mse(Var p, Var q);
// -mean_i log p[i, labels[i]] over probability rows; p[i, y_i] == 0 rejected.
Var cross_entropy(Var p, std::span<const int> labels);

Var add(Var a, Var b);
Var sub(Var a, Var b);
// Elementwise product of equal-shape tensors.
Var mul(Var a, Var b);
Var mul(Var a, const Tensor& constant);
Var add(Var a, const Tensor& constant);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var sum(Var x);
// Row sums as an n x 1 column.
Var sum_rows(Var x);

// Concatenates tensors with equal column counts along rows.
Var concat_rows(std::span<const Var> parts);
// Row r of the output concatenates table rows index[r*width .. r*width+width).
Var gather_concat(Var table, std::span<const std::size_t> index, std::size_t width);
// Weighted per-column mean of rows: out (T x d), out_t = sum_i w_it x_i / sum_i w_it.
// Weights are constants; columns whose total weight is 0 are rejected.
Var masked_mean(Var x, const Tensor& weights);

}  // namespace prokd::diff

#include "prokd/diffcore/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "prokd/diffcore/kernels.hpp"
#include "prokd/error.hpp"

namespace prokd::diff {

namespace {

[[noreturn]] void shape_error(const char* primitive, const std::string& detail) {
  throw Error("diffcore", std::string(primitive) + ": shape mismatch (" + detail + ")");
}

std::string dims(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

Tensor like(const Tensor& t) { return Tensor(t.shape()); }

}  // namespace

Var Graph::constant(Tensor t) {
  Node n;
  n.value = std::move(t);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::record(Tensor value, std::vector<Var> inputs, Backward back) {
  Node n;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const auto& v : inputs) {
    n.inputs.push_back(v.id());
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Tensor& Graph::grad_slot(Var v) {
  Node& n = nodes_[v.id()];
  if (!n.grad_ready) {
    n.grad = like(n.value);
    n.grad_ready = true;
  }
  return n.grad;
}

void Graph::accumulate(Var v, const Tensor& delta) {
  if (!nodes_[v.id()].requires_grad) return;
  Tensor& g = grad_slot(v);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

void Graph::backward(Var root) { backward(root, {}); }

void Graph::backward(Var root, std::span<Parameter* const> params) {
  if (!nodes_[root.id()].value.is_scalar())
    throw Error("diffcore", "backward: root is not a scalar (shape " +
                                nodes_[root.id()].value.shape_string() + ")");
  for (auto& n : nodes_) {
    n.grad_ready = false;
    n.grad = Tensor();
  }
  grad_slot(root)[0] = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.grad_ready || !n.back) continue;
    // Callbacks never append nodes, so `n` stays valid.
    n.back(*this, n.grad, n.value);
  }
  for (Parameter* p : params) p->grad = Tensor(p->value.shape());
  std::unordered_set<const Parameter*> wanted(params.begin(), params.end());
  for (auto& n : nodes_) {
    if (!n.param || !n.grad_ready || !wanted.count(n.param)) continue;
    Tensor& g = n.param->grad;
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
  }
  for (auto& n : nodes_) {
    if (n.grad_ready) continue;
    n.grad = like(n.value);
    n.grad_ready = true;
  }
}

// ---------------------------------------------------------------------------

Var affine(Var x, Var w, Var b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  const std::size_t n = xv.rows(), k = xv.cols(), m = wv.cols();
  if (wv.rows() != k) shape_error("affine", "input " + dims(xv) + ", weight " + dims(wv));
  if (bv.size() != m) shape_error("affine", "weight " + dims(wv) + ", bias " + dims(bv));
  Tensor out = Tensor::matrix(n, m);
  kernels::matmul(xv.data(), wv.data(), out.data(), n, k, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.at(i, j) += bv[j];
  return x.graph().record(std::move(out), {x, w, b}, [x, w, b, n, k, m](Graph& g, const Tensor& up, const Tensor&) {
    if (g.requires_grad(x)) {
      Tensor dx(x.value().shape());
      kernels::matmul_nt(up.data(), w.value().data(), dx.data(), n, m, k);
      g.accumulate(x, dx);
    }
    if (g.requires_grad(w)) {
      Tensor dw(w.value().shape());
      kernels::matmul_tn(x.value().data(), up.data(), dw.data(), n, k, m);
      g.accumulate(w, dw);
    }
    if (g.requires_grad(b)) {
      Tensor db(b.value().shape());
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) db[j] += up.at(i, j);
      g.accumulate(b, db);
    }
  });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
  if (bv.rows() != k) shape_error("matmul", dims(av) + " * " + dims(bv));
  Tensor out = Tensor::matrix(n, m);
  kernels::matmul(av.data(), bv.data(), out.data(), n, k, m);
  return a.graph().record(std::move(out), {a, b}, [a, b, n, k, m](Graph& g, const Tensor& up, const Tensor&) {
    if (g.requires_grad(a)) {
      Tensor da(a.value().shape());
      kernels::matmul_nt(up.data(), b.value().data(), da.data(), n, m, k);
      g.accumulate(a, da);
    }
    if (g.requires_grad(b)) {
      Tensor db(b.value().shape());
      kernels::matmul_tn(a.value().data(), up.data(), db.data(), n, k, m);
      g.accumulate(b, db);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t n = av.rows(), k = av.cols(), m = bv.rows();
  if (bv.cols() != k) shape_error("matmul_nt", dims(av) + " * " + dims(bv) + "^T");
  Tensor out = Tensor::matrix(n, m);
  kernels::matmul_nt(av.data(), bv.data(), out.data(), n, k, m);
  return a.graph().record(std::move(out), {a, b}, [a, b, n, k, m](Graph& g, const Tensor& up, const Tensor&) {
    if (g.requires_grad(a)) {
      Tensor da(a.value().shape());
      kernels::matmul(up.data(), b.value().data(), da.data(), n, m, k);
      g.accumulate(a, da);
    }
    if (g.requires_grad(b)) {
      Tensor db(b.value().shape());
      kernels::matmul_tn(up.data(), a.value().data(), db.data(), n, m, k);
      g.accumulate(b, db);
    }
  });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  const std::size_t n = av.rows(), m = av.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.at(j, i) = av.at(i, j);
  return a.graph().record(std::move(out), {a}, [a, n, m](Graph& g, const Tensor& up, const Tensor&) {
    Tensor da(a.value().shape());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) da.at(i, j) = up.at(j, i);
    g.accumulate(a, da);
  });
}

Var tanh(Var x) {
  const Tensor& xv = x.value();
  Tensor out = like(xv);
  kernels::tanh(xv.data(), out.data(), xv.size());
  return x.graph().record(std::move(out), {x}, [x](Graph& g, const Tensor& up, const Tensor& y) {
    Tensor dx = like(y);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = up[i] * (1.0 - y[i] * y[i]);
    g.accumulate(x, dx);
  });
}

Var exp(Var x) {
  const Tensor& xv = x.value();
  Tensor out = like(xv);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(xv[i]);
  return x.graph().record(std::move(out), {x}, [x](Graph& g, const Tensor& up, const Tensor& y) {
    Tensor dx = like(y);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = up[i] * y[i];
    g.accumulate(x, dx);
  });
}

Var log(Var x) {
  const Tensor& xv = x.value();
  Tensor out = like(xv);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(xv[i] > 0.0)) throw Error("diffcore", "log: non-positive argument");
    out[i] = std::log(xv[i]);
  }
  return x.graph().record(std::move(out), {x}, [x](Graph& g, const Tensor& up, const Tensor&) {
    const Tensor& xv = x.value();
    Tensor dx = like(xv);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = up[i] / xv[i];
    g.accumulate(x, dx);
  });
}

Var softmax_rows(Var x) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  Tensor out = like(xv);
  kernels::softmax_rows(xv.data(), out.data(), n, m);
  return x.graph().record(std::move(out), {x}, [x, n, m](Graph& g, const Tensor& up, const Tensor& s) {
    Tensor dx(x.value().shape());
    for (std::size_t i = 0; i < n; ++i) {
      double inner = 0.0;
      for (std::size_t j = 0; j < m; ++j) inner += up.at(i, j) * s.at(i, j);
      for (std::size_t j = 0; j < m; ++j) dx.at(i, j) = s.at(i, j) * (up.at(i, j) - inner);
    }
    g.accumulate(x, dx);
  });
}

Var l2_normalize_rows(Var x) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  Tensor out = like(xv);
  Tensor norms = Tensor::matrix(n, 1);
  if (!kernels::l2_normalize_rows(xv.data(), out.data(), norms.data(), n, m))
    throw Error("diffcore", "l2_normalize_rows: zero row cannot be normalized");
  Graph& graph = x.graph();
  Var nv = graph.constant(std::move(norms));
  return graph.record(std::move(out), {x}, [x, nv, n, m](Graph& g, const Tensor& up, const Tensor& z) {
    const Tensor& nr = nv.value();
    Tensor dx(x.value().shape());
    for (std::size_t i = 0; i < n; ++i) {
      double inner = 0.0;
      for (std::size_t j = 0; j < m; ++j) inner += up.at(i, j) * z.at(i, j);
      for (std::size_t j = 0; j < m; ++j) dx.at(i, j) = (up.at(i, j) - z.at(i, j) * inner) / nr[i];
    }
    g.accumulate(x, dx);
  });
}

Var dot(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.size() != bv.size()) shape_error("dot", dims(av) + " . " + dims(bv));
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return a.graph().record(Tensor::scalar(s), {a, b}, [a, b](Graph& g, const Tensor& up, const Tensor&) {
    const double u = up[0];
    if (g.requires_grad(a)) {
      Tensor da = like(a.value());
      for (std::size_t i = 0; i < da.size(); ++i) da[i] = u * b.value()[i];
      g.accumulate(a, da);
    }
    if (g.requires_grad(b)) {
      Tensor db = like(b.value());
      for (std::size_t i = 0; i < db.size(); ++i) db[i] = u * a.value()[i];
      g.accumulate(b, db);
    }
  });
}

Var euclidean_distance(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t n = av.rows(), m = bv.rows(), d = av.cols();
  if (bv.cols() != d) shape_error("euclidean_distance", dims(av) + " vs " + dims(bv));
  Tensor out = Tensor::matrix(n, m);
  kernels::pairwise_distance(av.data(), bv.data(), out.data(), n, m, d);
  return a.graph().record(std::move(out), {a, b}, [a, b, n, m, d](Graph& g, const Tensor& up, const Tensor& dist) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Tensor da(av.shape());
    Tensor db(bv.shape());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double r = dist.at(i, j);
        if (r == 0.0) continue;  // subgradient 0 at coincident points
        const double c = up.at(i, j) / r;
        for (std::size_t p = 0; p < d; ++p) {
          const double diff = av.at(i, p) - bv.at(j, p);
          da.at(i, p) += c * diff;
          db.at(j, p) -= c * diff;
        }
      }
    }
    g.accumulate(a, da);
    g.accumulate(b, db);
  });
}

Var mse(Var p, Var q) {
  const Tensor& pv = p.value();
  const Tensor& qv = q.value();
  if (!pv.same_shape(qv)) shape_error("mse", dims(pv) + " vs " + dims(qv));
  const std::size_t n = pv.rows();
  double s = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double diff = pv[i] - qv[i];
    s += diff * diff;
  }
  return p.graph().record(Tensor::scalar(s / static_cast<double>(n)), {p, q},
                          [p, q, n](Graph& g, const Tensor& up, const Tensor&) {
                            const double c = 2.0 * up[0] / static_cast<double>(n);
                            Tensor dp = like(p.value());
                            for (std::size_t i = 0; i < dp.size(); ++i)
                              dp[i] = c * (p.value()[i] - q.value()[i]);
                            g.accumulate(p, dp);
                            for (auto& v : dp.values()) v = -v;
                            g.accumulate(q, dp);
                          });
}

Var cross_entropy(Var p, std::span<const int> labels) {
  const Tensor& pv = p.value();
  const std::size_t n = pv.rows(), m = pv.cols();
  if (labels.size() != n)
    shape_error("cross_entropy", std::to_string(n) + " rows vs " + std::to_string(labels.size()) + " labels");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= m)
      throw Error("diffcore", "cross_entropy: label index out of range");
    const double py = pv.at(i, static_cast<std::size_t>(y));
    if (!(py > 0.0)) throw Error("diffcore", "cross_entropy: zero probability at gold label");
    s -= std::log(py);
  }
  std::vector<int> ys(labels.begin(), labels.end());
  return p.graph().record(Tensor::scalar(s / static_cast<double>(n)), {p},
                          [p, ys = std::move(ys), n](Graph& g, const Tensor& up, const Tensor&) {
                            Tensor dp = like(p.value());
                            const double c = -up[0] / static_cast<double>(n);
                            for (std::size_t i = 0; i < n; ++i) {
                              const auto y = static_cast<std::size_t>(ys[i]);
                              dp.at(i, y) = c / p.value().at(i, y);
                            }
                            g.accumulate(p, dp);
                          });
}

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) shape_error("add", dims(av) + " + " + dims(bv));
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& up, const Tensor&) {
    g.accumulate(a, up);
    g.accumulate(b, up);
  });
}

Var sub(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) shape_error("sub", dims(av) + " - " + dims(bv));
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& up, const Tensor&) {
    g.accumulate(a, up);
    Tensor neg = up;
    for (auto& v : neg.values()) v = -v;
    g.accumulate(b, neg);
  });
}

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) shape_error("mul", dims(av) + " * " + dims(bv));
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& up, const Tensor&) {
    if (g.requires_grad(a)) {
      Tensor da = up;
      for (std::size_t i = 0; i < da.size(); ++i) da[i] *= b.value()[i];
      g.accumulate(a, da);
    }
    if (g.requires_grad(b)) {
      Tensor db = up;
      for (std::size_t i = 0; i < db.size(); ++i) db[i] *= a.value()[i];
      g.accumulate(b, db);
    }
  });
}

Var mul(Var a, const Tensor& constant) { return mul(a, a.graph().constant(constant)); }

Var add(Var a, const Tensor& constant) { return add(a, a.graph().constant(constant)); }

Var scale(Var a, double c) {
  Tensor out = a.value();
  for (auto& v : out.values()) v *= c;
  return a.graph().record(std::move(out), {a}, [a, c](Graph& g, const Tensor& up, const Tensor&) {
    Tensor da = up;
    for (auto& v : da.values()) v *= c;
    g.accumulate(a, da);
  });
}

Var add_scalar(Var a, double c) {
  Tensor out = a.value();
  for (auto& v : out.values()) v += c;
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Tensor& up, const Tensor&) { g.accumulate(a, up); });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return x.graph().record(Tensor::scalar(s), {x}, [x](Graph& g, const Tensor& up, const Tensor&) {
    Tensor dx = like(x.value());
    dx.fill(up[0]);
    g.accumulate(x, dx);
  });
}

Var sum_rows(Var x) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  Tensor out = Tensor::matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i] += xv.at(i, j);
  return x.graph().record(std::move(out), {x}, [x, n, m](Graph& g, const Tensor& up, const Tensor&) {
    Tensor dx(x.value().shape());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) dx.at(i, j) = up[i];
    g.accumulate(x, dx);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error("diffcore", "concat_rows: no inputs");
  const std::size_t m = parts.front().value().cols();
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.value().cols() != m)
      shape_error("concat_rows", dims(parts.front().value()) + " vs " + dims(p.value()));
    n += p.value().rows();
  }
  Tensor out = Tensor::matrix(n, m);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), out.data() + offset);
    offset += p.value().size();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts.front().graph().record(std::move(out), inputs, [inputs](Graph& g, const Tensor& up, const Tensor&) {
    std::size_t off = 0;
    for (const auto& p : inputs) {
      const std::size_t cnt = p.value().size();
      if (g.requires_grad(p)) {
        Tensor dp(p.value().shape());
        std::copy(up.data() + off, up.data() + off + cnt, dp.data());
        g.accumulate(p, dp);
      }
      off += cnt;
    }
  });
}

Var gather_concat(Var table, std::span<const std::size_t> index, std::size_t width) {
  const Tensor& tv = table.value();
  const std::size_t d = tv.cols(), rows = tv.rows();
  if (width == 0 || index.size() % width != 0)
    shape_error("gather_concat", std::to_string(index.size()) + " indices, width " + std::to_string(width));
  const std::size_t n = index.size() / width;
  Tensor out = Tensor::matrix(n, width * d);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= rows) throw Error("diffcore", "gather_concat: row index out of range");
    std::copy_n(tv.data() + index[r] * d, d, out.data() + r * d);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return table.graph().record(std::move(out), {table}, [table, idx = std::move(idx), d](Graph& g, const Tensor& up, const Tensor&) {
    Tensor& dt = g.grad_slot(table);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double* dst = dt.data() + idx[r] * d;
      const double* src = up.data() + r * d;
      for (std::size_t p = 0; p < d; ++p) dst[p] += src[p];
    }
  });
}

Var masked_mean(Var x, const Tensor& weights) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), d = xv.cols(), t = weights.cols();
  if (weights.rows() != n) shape_error("masked_mean", "rows " + dims(xv) + ", weights " + dims(weights));
  // Column-normalized weights so that out = wn^T x.
  Tensor wn = weights;
  for (std::size_t k = 0; k < t; ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += weights.at(i, k);
    if (!(total > 0.0)) throw Error("diffcore", "masked_mean: column with zero total weight");
    for (std::size_t i = 0; i < n; ++i) wn.at(i, k) = weights.at(i, k) / total;
  }
  Tensor out = Tensor::matrix(t, d);
  kernels::matmul_tn(wn.data(), xv.data(), out.data(), n, t, d);
  Var wv = x.graph().constant(std::move(wn));
  return x.graph().record(std::move(out), {x}, [x, wv, n, t, d](Graph& g, const Tensor& up, const Tensor&) {
    Tensor dx(x.value().shape());
    kernels::matmul(wv.value().data(), up.data(), dx.data(), n, t, d);
    g.accumulate(x, dx);
  });
}

}  // namespace prokd::diff

#include <cmath>
#include <random>

#include <doctest.h>

#include "loss_cases.hpp"
#include "prokd/diffcore/adam.hpp"
#include "prokd/diffcore/gradcheck.hpp"
#include "prokd/diffcore/graph.hpp"
#include "prokd/error.hpp"
#include "support.hpp"

using namespace prokd;
using namespace prokd::diff;
using prokd::testing::random_matrix;

TEST_SUITE("diffcore") {
  TEST_CASE("tensor shape bookkeeping") {
    const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m.at(1, 2) == 6);
    CHECK(Tensor::vector({1, 2}).rows() == 1);
    CHECK(Tensor::scalar(3).item() == 3);
    CHECK_THROWS(Tensor({2, 2}, std::vector<double>{1, 2, 3}));
    CHECK_THROWS(m.item());
  }

  TEST_CASE("softmax of equal logits is uniform") {
    Graph g;
    const auto y = softmax_rows(g.constant(Tensor::vector({0, 0})));
    CHECK(y.value()[0] == 0.5);
    CHECK(y.value()[1] == 0.5);
  }

  TEST_CASE("l2 normalization of a 3-4-5 vector") {
    Graph g;
    const auto y = l2_normalize_rows(g.constant(Tensor::vector({3, 4})));
    CHECK(y.value()[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(y.value()[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK_THROWS_AS(l2_normalize_rows(g.constant(Tensor::vector({0, 0}))), Error);
  }

  TEST_CASE("cross-entropy of a perfect prediction is zero") {
    Graph g;
    const std::vector<int> labels{1};
    CHECK(cross_entropy(g.constant(Tensor::matrix({{0, 1, 0}})), labels).value().item() == 0.0);
    CHECK_THROWS_AS(cross_entropy(g.constant(Tensor::matrix({{1, 0, 0}})), labels), Error);
  }

  TEST_CASE("softmax rows are positive and sum to one") {
    std::mt19937_64 rng(11);
    Graph g;
    const auto y = softmax_rows(g.constant(random_matrix(rng, 50, 9, -30, 30))).value();
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double s = 0;
      for (double v : y.row(i)) {
        CHECK(v > 0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }

  TEST_CASE("normalized rows have unit norm") {
    std::mt19937_64 rng(12);
    Graph g;
    const auto y = l2_normalize_rows(g.constant(random_matrix(rng, 50, 7))).value();
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double s = 0;
      for (double v : y.row(i)) s += v * v;
      CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-9);
    }
  }

  TEST_CASE("shape errors name the primitive") {
    Graph g;
    const auto a = g.constant(Tensor::matrix(2, 3));
    const auto b = g.constant(Tensor::matrix(2, 3));
    try {
      matmul(a, b);
      FAIL("expected a shape error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("matmul") != std::string::npos);
    }
    CHECK_THROWS_AS(add(a, g.constant(Tensor::matrix(3, 2))), Error);
    CHECK_THROWS_AS(log(g.constant(Tensor::vector({1, 0}))), Error);
    CHECK_THROWS_AS(log(g.constant(Tensor::vector({-1}))), Error);
  }

  TEST_CASE("derivative of x*x at 3 is 6") {
    Parameter x("x", Tensor::scalar(3));
    Graph g;
    const auto v = g.param(x);
    Parameter* ps[] = {&x};
    g.backward(mul(v, v), ps);
    CHECK(x.grad.item() == 6.0);
  }

  TEST_CASE("unreached parameters get exact zeros and non-scalar roots are rejected") {
    Parameter x("x", Tensor::scalar(2)), y("y", Tensor::vector({1, 2}));
    y.grad.fill(7.0);
    Graph g;
    const auto v = g.param(x);
    Parameter* ps[] = {&x, &y};
    g.backward(scale(v, 3.0), ps);
    CHECK(x.grad.item() == 3.0);
    CHECK(y.grad == Tensor({2}, 0.0));
    Graph h;
    CHECK_THROWS_AS(h.backward(h.param(y), ps), Error);
  }

  TEST_CASE("frozen-only expression leaves parameters unchanged after a step") {
    Parameter e("embedding", Tensor::vector({1, -2, 3}), true);
    Graph g;
    Parameter* ps[] = {&e};
    g.backward(dot(g.param(e), g.param(e)), ps);
    AdamState s;
    s.learning_rate = 0.1;
    const Tensor before = e.value;
    adam_step(ps, s);
    CHECK(e.value == before);
    CHECK(s.step == 1);
  }

  TEST_CASE("check_gradient on a quadratic bowl") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      Parameter x("x", random_matrix(rng, 3, 4, -5, 5));
      const Tensor center = random_matrix(rng, 3, 4);
      Parameter* ps[] = {&x};
      const auto r = check_gradient(
          [&](Graph& g) {
            const auto d = sub(g.param(x), g.constant(center));
            return scale(dot(d, d), 0.5);
          },
          ps, 1e-5);
      CHECK(r.max_error < 1e-8);
      CHECK(r.entries_checked == 12);
    }
  }

  TEST_CASE("check_gradient agrees with central differences for every primitive") {
    std::mt19937_64 rng(6);
    Parameter a("a", random_matrix(rng, 3, 4)), w("w", random_matrix(rng, 4, 5)), b("b", random_matrix(rng, 1, 5));
    Parameter c("c", random_matrix(rng, 2, 5)), pos("pos", random_matrix(rng, 3, 5, 0.5, 2.0));
    Parameter* ps[] = {&a, &w, &b, &c, &pos};
    const Tensor weights = testing::random_distributions(rng, 3, 2);
    const std::vector<int> labels{0, 4, 2};
    const std::vector<std::size_t> idx{0, 1, 1, 0, 0, 1};
    const auto r = check_gradient(
        [&](Graph& g) {
          const auto x = tanh(affine(g.param(a), g.param(w), g.param(b)));
          const auto p = softmax_rows(x);
          const auto z = l2_normalize_rows(g.param(c));
          const auto d = euclidean_distance(x, g.param(c));
          const auto nt = matmul_nt(x, z);
          const Var parts[] = {x, g.param(c)};
          const auto cat = concat_rows(parts);
          const auto gc = gather_concat(g.param(c), idx, 3);
          const auto mm = masked_mean(x, weights);
          auto t = cross_entropy(p, labels);
          t = add(t, mse(p, softmax_rows(transpose(transpose(x)))));
          t = add(t, scale(sum(d), 0.1));
          t = add(t, sum(exp(scale(nt, 0.3))));
          t = add(t, scale(sum(log(g.param(pos))), 0.2));
          t = add(t, sum(sum_rows(mul(cat, cat))));
          t = add(t, scale(dot(gc, gc), 0.05));
          t = add(t, sum(mul(mm, Tensor(mm.value().shape(), 0.5))));
          t = add(t, add_scalar(sum(add(x, Tensor(x.value().shape(), 1.0))), -1.0));
          return add(t, sum(matmul(g.param(a), g.param(w))));
        },
        ps, 1e-5);
    CHECK(r.max_error < 1e-6);
  }

  TEST_CASE("evaluation is deterministic") {
    std::mt19937_64 rng(8);
    const Tensor x = random_matrix(rng, 20, 9), w = random_matrix(rng, 9, 9);
    auto run = [&] {
      Graph g;
      return softmax_rows(tanh(matmul(g.constant(x), g.constant(w)))).value();
    };
    CHECK(run() == run());
  }

  TEST_CASE("adam: zero gradient keeps parameters and decays moments") {
    Parameter p("p", Tensor::vector({1, 2}));
    Parameter* ps[] = {&p};
    AdamState s;
    p.grad = Tensor::vector({1, 1});
    adam_step(ps, s);
    const Tensor after_first = p.value;
    const Tensor m1 = s.first_moment[0], v1 = s.second_moment[0];
    p.grad.fill(0.0);
    adam_step(ps, s);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(s.first_moment[0][i] == doctest::Approx(0.9 * m1[i]));
      CHECK(s.second_moment[0][i] == doctest::Approx(0.999 * v1[i]));
    }
    Parameter q("q", Tensor::vector({1, 2}));
    Parameter* qs[] = {&q};
    AdamState fresh;
    adam_step(qs, fresh);
    CHECK(q.value == Tensor::vector({1, 2}));
    CHECK(after_first != p.value);
  }

  TEST_CASE("adam: one step with constant gradient moves by about the learning rate") {
    for (double g : {0.01, 1.0, -250.0}) {
      Parameter p("p", Tensor::scalar(0.5));
      p.grad = Tensor::scalar(g);
      Parameter* ps[] = {&p};
      AdamState s;
      s.learning_rate = 0.01;
      adam_step(ps, s);
      // m_hat = g, v_hat = g^2 -> step = lr * g / (|g| + eps)
      const double expected = 0.5 - 0.01 * g / (std::abs(g) + 1e-8);
      CHECK(p.value.item() == doctest::Approx(expected).epsilon(1e-12));
      CHECK(std::abs(std::abs(p.value.item() - 0.5) - 0.01) < 1e-8);
    }
  }

  TEST_CASE("adam: frozen parameter with nonzero gradient is untouched") {
    Parameter e("embedding", Tensor::vector({1, 2, 3}), true);
    Parameter w("w", Tensor::vector({1}));
    e.grad = Tensor::vector({5, 5, 5});
    w.grad = Tensor::vector({1});
    Parameter* ps[] = {&e, &w};
    AdamState s;
    for (int i = 0; i < 3; ++i) adam_step(ps, s);
    CHECK(e.value == Tensor::vector({1, 2, 3}));
    CHECK(w.value != Tensor::vector({1}));
    CHECK(s.step == 3);
  }

  TEST_CASE("adam rejects a non-positive learning rate") {
    Parameter p("p", Tensor::scalar(1));
    Parameter* ps[] = {&p};
    AdamState s;
    s.learning_rate = 0.0;
    CHECK_THROWS_AS(adam_step(ps, s), Error);
    s.learning_rate = -1.0;
    CHECK_THROWS_AS(adam_step(ps, s), Error);
  }

  TEST_CASE("gradient of the alignment loss through a 2-class toy encoder") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto b = testing::toy_batch(seed);
      loss::FusionConfig f;
      f.tau1 = 1.0;
      auto m = b->model;
      auto params = m->parameters();
      const auto r = check_gradient(
          [&](Graph& g) {
            const auto hs = m->encode(g, b->src_ptrs, false);
            const auto src = masked_mean(hs, testing::one_hot_weights(b->gold, 3));
            const auto ht = m->encode(g, b->tgt_ptrs, false);
            const auto tgt = masked_mean(ht, b->teacher_probs);
            const std::vector<std::size_t> two{1, 2};
            return loss::class_alignment(src, tgt, two, f);
          },
          params, 1e-5);
      CHECK(r.max_error < 1e-4);
    }
  }

  TEST_CASE("every assembled loss passes the gradient check over ten seeds") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
      for (const auto& c : testing::loss_cases(seed)) {
        CAPTURE(c.name);
        CAPTURE(seed);
        CHECK(c.check().max_error < 1e-4);
      }
  }
}

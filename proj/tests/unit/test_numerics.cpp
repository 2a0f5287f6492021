// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "geotag/numerics/graph.hpp"
#include "geotag/numerics/optim.hpp"

using namespace geotag::numerics;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  return Tensor::uniform(std::move(shape), -scale, scale, rng);
}

// Contracts a tensor against fixed random weights so the loss depends on every
// entry with a distinct coefficient.
Var probe(Var v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Var w = v.graph()->constant(random_tensor(v.shape(), rng));
  return mean(mul(v, w));
}

struct OpFixture {
  ParameterSet params;
  std::mt19937_64 rng{42};

  OpFixture() {
    params.add("x", random_tensor({3, 4}, rng));
    params.add("w", random_tensor({4, 5}, rng, 0.5));
    params.add("row", random_tensor({4}, rng));
    params.add("gamma", random_tensor({4}, rng));
    params.add("beta", random_tensor({4}, rng));
    params.add("table", random_tensor({6, 4}, rng));
    params.add("y", random_tensor({3, 4}, rng));
  }
  Var p(Graph& g, const char* name) { return g.param(params.get(name)); }
};

}  // namespace

TEST_CASE("forward examples") {
  Graph g;
  std::mt19937_64 rng(1);
  Tensor a = random_tensor({3, 3}, rng);
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Var out = matmul(g.constant(eye), g.constant(a));
  for (std::size_t i = 0; i < 9; ++i) CHECK(out.value()[i] == a[i]);

  Var s = softmax(g.constant(Tensor({2}, {0.0, 0.0})));
  CHECK(s.value()[0] == 0.5);
  CHECK(s.value()[1] == 0.5);

  Var ln = layer_norm(g.constant(Tensor({5}, 3.7)), g.constant(Tensor({5}, 1.0)), g.constant(Tensor({5}, 0.0)));
  for (double v : ln.value().storage()) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("backward examples") {
  SUBCASE("x*x at 3") {
    ParameterSet ps;
    auto& x = ps.add("x", Tensor::scalar(3.0));
    Graph g;
    Var xv = g.param(x);
    g.backward(mul(xv, xv));
    CHECK(x.grad[0] == doctest::Approx(6.0).epsilon(1e-15));
  }
  SUBCASE("cross entropy wrt logits is p - onehot") {
    Graph g;
    Var z = g.variable(Tensor({1, 4}, {0.3, -1.2, 2.0, 0.1}));
    Var loss = cross_entropy(z, std::vector<int>{2});
    g.backward(loss);
    Var p = softmax(g.constant(z.value()));
    Tensor gz = g.grad(z);
    for (std::size_t j = 0; j < 4; ++j) CHECK(gz[j] == doctest::Approx(p.value()[j] - (j == 2 ? 1.0 : 0.0)));
  }
  SUBCASE("matmul gradient is grad_C * B^T") {
    std::mt19937_64 rng(3);
    Graph g;
    Tensor bt = random_tensor({4, 2}, rng);
    Tensor gc = random_tensor({3, 2}, rng);
    Var a = g.variable(random_tensor({3, 4}, rng));
    Var c = matmul(a, g.constant(bt));
    // loss = sum(C .* gc) makes dL/dC == gc.
    Var loss = mean(mul(c, g.constant(gc)));
    g.backward(scale(loss, 6.0));
    Tensor ga = g.grad(a);
    REQUIRE(ga.shape() == Shape{3, 4});
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 4; ++k) {
        double expect = 0.0;
        for (std::size_t j = 0; j < 2; ++j) expect += gc.at(i, j) * bt.at(k, j);
        CHECK(ga.at(i, k) == doctest::Approx(expect).epsilon(1e-12));
      }
  }
  SUBCASE("non-scalar loss is rejected") {
    Graph g;
    Var v = g.variable(Tensor({2}, {1.0, 2.0}));
    CHECK_THROWS_AS(g.backward(v), ShapeError);
  }
}

TEST_CASE("node values stay put while the graph grows") {
  Graph g;
  Var a = g.constant(Tensor({3, 4}));
  const Tensor& held = a.value();
  for (int i = 0; i < 5000; ++i) g.constant(Tensor({1}));
  CHECK(&held == &a.value());
  CHECK(held.shape() == Shape{3, 4});
}

TEST_CASE("shape errors name the node") {
  Graph g;
  Var a = g.constant(Tensor({2, 3}));
  Var b = g.constant(Tensor({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("matmul (node 2)") != std::string::npos);
  }
  CHECK_THROWS_AS(embed_lookup(g.constant(Tensor({3, 2})), {3}), ShapeError);
}

TEST_CASE("grad_check of an affine loss is exact") {
  ParameterSet ps;
  std::mt19937_64 rng(5);
  ps.add("w", random_tensor({4, 3}, rng));
  ps.add("b", random_tensor({3}, rng));
  Tensor x = random_tensor({2, 4}, rng);
  double err = grad_check(ps, [&](Graph& g) {
    return probe(add(matmul(g.constant(x), g.param(ps.get("w"))), g.param(ps.get("b"))), 9);
  });
  CHECK(err <= 1e-10);
}

// One loss per op kind; each is checked on its own and with its backward rule
// deliberately broken.
TEST_CASE("per-op gradient checks and negative controls") {
  OpFixture f;
  std::vector<std::pair<OpKind, LossBuilder>> cases = {
      {OpKind::matmul, [&](Graph& g) { return probe(matmul(f.p(g, "x"), f.p(g, "w")), 1); }},
      {OpKind::add, [&](Graph& g) { return probe(add(f.p(g, "x"), f.p(g, "row")), 2); }},
      {OpKind::mul, [&](Graph& g) { return probe(mul(f.p(g, "x"), f.p(g, "y")), 3); }},
      {OpKind::concat,
       [&](Graph& g) {
         return add(probe(concat({f.p(g, "x"), f.p(g, "y")}, 0), 4),
                    probe(concat({f.p(g, "x"), f.p(g, "y")}, 1), 5));
       }},
      {OpKind::slice,
       [&](Graph& g) { return add(probe(slice(f.p(g, "x"), 0, 1, 3), 6), probe(slice(f.p(g, "x"), 1, 1, 3), 7)); }},
      {OpKind::embed_lookup, [&](Graph& g) { return probe(embed_lookup(f.p(g, "table"), {0, 3, 3, 5}), 8); }},
      {OpKind::softmax, [&](Graph& g) { return probe(softmax(f.p(g, "x")), 9); }},
      {OpKind::layer_norm,
       [&](Graph& g) { return probe(layer_norm(f.p(g, "x"), f.p(g, "gamma"), f.p(g, "beta")), 10); }},
      {OpKind::gelu, [&](Graph& g) { return probe(gelu(f.p(g, "x")), 11); }},
      {OpKind::dropout, [&](Graph& g) { return probe(dropout(f.p(g, "x"), 0.1), 12); }},
      {OpKind::cross_entropy,
       [&](Graph& g) {
         Var hard = cross_entropy(f.p(g, "x"), std::vector<int>{0, 3, 1});
         Var soft = cross_entropy(f.p(g, "x"), softmax(f.p(g, "y")));
         return add(hard, soft);
       }},
      {OpKind::reshape, [&](Graph& g) { return probe(reshape(f.p(g, "x"), {2, 6}), 13); }},
      {OpKind::transpose, [&](Graph& g) { return probe(transpose(f.p(g, "x")), 14); }},
      {OpKind::mean, [&](Graph& g) { return mul(mean(f.p(g, "x")), mean(f.p(g, "y"))); }},
      {OpKind::mask_fill,
       [&](Graph& g) {
         std::vector<std::uint8_t> m(12, 0);
         m[1] = m[5] = m[10] = 1;
         return probe(mask_fill(f.p(g, "x"), m, -3.0), 15);
       }},
  };
  CHECK(cases.size() == 15);
  for (auto& [kind, build] : cases) {
    CAPTURE(op_name(kind));
    CHECK(grad_check(f.params, build) <= 1e-4);
    testing::set_backward_fault(kind);
    CHECK(grad_check(f.params, build) > 1e-2);
    testing::set_backward_fault(std::nullopt);
  }
}

TEST_CASE("all ops composed into a two-layer graph") {
  ParameterSet ps;
  std::mt19937_64 rng(11);
  ps.add("table", random_tensor({7, 4}, rng));
  ps.add("w1", random_tensor({4, 6}, rng, 0.7));
  ps.add("b1", random_tensor({6}, rng, 0.1));
  ps.add("g1", random_tensor({6}, rng));
  ps.add("be1", random_tensor({6}, rng));
  ps.add("w2", random_tensor({12, 3}, rng, 0.7));
  auto build = [&](Graph& g) {
    Var e = embed_lookup(g.param(ps.get("table")), {1, 4, 6, 1});
    Var h = add(matmul(e, g.param(ps.get("w1"))), g.param(ps.get("b1")));
    h = gelu(layer_norm(h, g.param(ps.get("g1")), g.param(ps.get("be1"))));
    h = dropout(h, 0.2);
    Var scores = matmul(h, transpose(h));
    std::vector<std::uint8_t> m(16, 0);
    m[3] = m[7] = 1;
    Var att = softmax(mask_fill(scale(scores, 0.5), m, -1e9));
    Var ctx = concat({slice(matmul(att, h), 1, 0, 3), slice(h, 1, 3, 6)}, 1);
    Var flat = reshape(slice(ctx, 0, 0, 2), {1, 12});
    Var logits = matmul(flat, g.param(ps.get("w2")));
    return add(cross_entropy(logits, std::vector<int>{2}), mean(mul(h, h)));
  };
  CHECK(grad_check(ps, build, 1e-5) <= 1e-4);
}

TEST_CASE("grad_check refuses stochastic dropout") {
  ParameterSet ps;
  ps.add("x", Tensor({4}, 1.0));
  auto build = [&](Graph& g) { return mean(dropout(g.param(ps.get("x")), 0.5)); };
  CHECK_THROWS_AS(grad_check(ps, build, 1e-5, true), std::logic_error);
  CHECK(grad_check(ps, build, 1e-5, false) <= 1e-10);
  CHECK_THROWS_AS(grad_check(ps, build, 1e-2), std::invalid_argument);
}

TEST_CASE("adam examples") {
  SUBCASE("zero gradient leaves the parameter unchanged") {
    ParameterSet ps;
    auto& p = ps.add("w", Tensor({2}, {0.5, -1.0}));
    AdamState st;
    adam_step(ps, st);
    CHECK(p.value[0] == 0.5);
    CHECK(p.value[1] == -1.0);
    CHECK(st.step == 1);
  }
  SUBCASE("first step closed form") {
    ParameterSet ps;
    auto& p = ps.add("w", Tensor::scalar(0.0));
    p.grad[0] = 1.0;
    AdamState st;
    st.options.lr = 0.1;
    adam_step(ps, st);
    CHECK(p.value[0] == doctest::Approx(-0.1 * (1.0 / (1.0 + 1e-8))).epsilon(1e-15));
  }
  SUBCASE("three steps against a scalar oracle") {
    ParameterSet ps;
    auto& p = ps.add("w", Tensor::scalar(0.25));
    AdamState st;
    st.options.lr = 0.01;
    const double grads[] = {1.0, -1.0, 2.0};
    double w = 0.25, m = 0.0, v = 0.0;
    for (int t = 1; t <= 3; ++t) {
      const double gr = grads[t - 1];
      m = 0.9 * m + 0.1 * gr;
      v = 0.999 * v + 0.001 * gr * gr;
      const double mh = m / (1.0 - std::pow(0.9, t));
      const double vh = v / (1.0 - std::pow(0.999, t));
      w -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
      p.grad[0] = gr;
      adam_step(ps, st);
      CHECK(std::abs(p.value[0] - w) <= 1e-12);
      CHECK(st.step == t);
    }
  }
  SUBCASE("NaN gradient names the parameter") {
    ParameterSet ps;
    auto& p = ps.add("encoder.w", Tensor::scalar(1.0));
    p.grad[0] = std::nan("");
    AdamState st;
    try {
      adam_step(ps, st);
      FAIL("expected failure");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("encoder.w") != std::string::npos);
    }
  }
}

TEST_CASE("softmax rows are distributions") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Graph g;
    Var s = softmax(g.constant(random_tensor({4, 7}, rng, 20.0)));
    for (std::size_t i = 0; i < 4; ++i) {
      double sum = 0.0;
      for (double v : s.value().row(i)) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("seeded dropout is deterministic") {
  Tensor x({50}, 1.0);
  Graph g1(true, 77), g2(true, 77), g3(true, 78);
  Var a = dropout(g1.constant(x), 0.3);
  Var b = dropout(g2.constant(x), 0.3);
  Var c = dropout(g3.constant(x), 0.3);
  CHECK(a.value().storage() == b.value().storage());
  CHECK(a.value().storage() != c.value().storage());
  Graph eval;
  CHECK(dropout(eval.constant(x), 0.3).value().storage() == x.storage());
}

TEST_CASE("fan-out gradients sum over branches") {
  std::mt19937_64 rng(21);
  Tensor x0 = random_tensor({5}, rng);
  auto grad_of = [&](int which) {
    Graph g;
    Var x = g.variable(x0);
    Var f = probe(gelu(x), 1);
    Var h = probe(softmax(x), 2);
    Var loss = which == 0 ? f : which == 1 ? h : add(f, h);
    g.backward(loss);
    return g.grad(x);
  };
  Tensor gf = grad_of(0), gh = grad_of(1), gs = grad_of(2);
  for (std::size_t i = 0; i < 5; ++i) CHECK(gs[i] == doctest::Approx(gf[i] + gh[i]).epsilon(1e-14));
}

// Copyright 2026 The HashNews Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "hashnews/diffmath.h"
#include "hashnews/errors.h"

using namespace hashnews;
using namespace hashnews::diff;

namespace {

Var random_var(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(rows, cols);
  for (auto& x : t.data()) x = uniform(rng, -scale, scale);
  return Var(t, true);
}

// Weighted sum so that every output element gets a distinct upstream grad.
Var probe(const Var& y) {
  Tensor w = Tensor::zeros(y.rows(), y.cols());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(1.0 + 0.7 * static_cast<double>(i));
  return sum(mul(y, Var(w)));
}

}  // namespace

TEST_CASE("forward examples") {
  const Var s = softmax(Var(Tensor::zeros(1, 3)), 1);
  for (double p : s.value().data()) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Rng rng(1);
  const Var x = random_var(3, 4, rng);
  Tensor eye = Tensor::zeros(3, 3);
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  CHECK(matmul(Var(eye), x).value() == x.value());

  CHECK(dropout(x, 0.0, rng, true).value() == x.value());
  CHECK(dropout(x, 0.5, rng, false).value() == x.value());
}

TEST_CASE("dropout keeps or scales every element") {
  Rng rng(3);
  const Var x(Tensor({4, 50}, 1.0));
  const Var y = dropout(x, 0.25, rng, true);
  std::size_t kept = 0;
  for (double v : y.value().data()) {
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
    kept += v != 0.0;
  }
  CHECK(kept > 100);
  CHECK(kept < 200);
  CHECK_THROWS_AS(dropout(x, 1.0, rng, true), ArgumentError);
}

TEST_CASE("shape errors name both shapes") {
  const Var a(Tensor::zeros(2, 3)), b(Tensor::zeros(2, 3));
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, Var(Tensor::zeros(3, 2))), ShapeError);
  CHECK_THROWS_AS(concat({a, Var(Tensor::zeros(3, 2))}, 1), ShapeError);
  CHECK_THROWS_AS(slice(a, 0, 1, 5), ShapeError);
}

TEST_CASE("non-finite results raise numeric errors") {
  Tensor t = Tensor::zeros(1, 2);
  t[0] = std::numeric_limits<double>::max();
  t[1] = std::numeric_limits<double>::max();
  CHECK_THROWS_AS(add(Var(t), Var(t)), NumericError);
}

TEST_CASE("backward basics") {
  Rng rng(4);
  Var x = random_var(2, 3, rng);
  backward(sum(x));
  for (double g : x.grad().data()) CHECK(g == 1.0);

  x.zero_grad();
  backward(sum(mul(x, x)));
  for (std::size_t i = 0; i < x.value().size(); ++i) {
    CHECK(x.grad()[i] == doctest::Approx(2.0 * x.value()[i]).epsilon(1e-14));
  }

  // Accumulates across uses and across calls.
  x.zero_grad();
  backward(sum(add(x, x)));
  backward(sum(x));
  for (double g : x.grad().data()) CHECK(g == 3.0);

  CHECK_THROWS_AS(backward(x), ArgumentError);
}

TEST_CASE("topological order visits each node once with inputs first") {
  Rng rng(5);
  const Var a = random_var(2, 2, rng);
  const Var b = tanh(a);
  const Var c = add(b, mul(b, a));
  const Var loss = sum(add(c, b));
  const auto order = topological_order(loss);
  std::set<Node*> seen;
  for (Node* n : order) {
    for (const auto& in : n->inputs) CHECK(seen.count(in.get()) == 1);
    CHECK(seen.insert(n).second);
  }
  CHECK(order.back() == loss.node().get());
}

TEST_CASE("every primitive passes a gradient check") {
  Rng rng(11);
  const Var a = random_var(3, 4, rng);
  const Var b = random_var(4, 2, rng);
  const Var c = random_var(3, 4, rng);
  const Var row = random_var(1, 4, rng);
  const std::int32_t idx[] = {1, 0, 3};
  const std::int32_t ids[] = {2, 0, 2, 1};

  const std::vector<std::pair<const char*, std::function<Var()>>> cases = {
      {"matmul", [&] { return probe(matmul(a, b)); }},
      {"transpose", [&] { return probe(transpose(a)); }},
      {"add", [&] { return probe(add(a, c)); }},
      {"add_row", [&] { return probe(add(a, row)); }},
      {"sub", [&] { return probe(sub(a, c)); }},
      {"mul", [&] { return probe(mul(a, c)); }},
      {"scale", [&] { return probe(scale(a, -1.7)); }},
      {"concat0", [&] { return probe(concat({a, c}, 0)); }},
      {"concat1", [&] { return probe(concat({a, c}, 1)); }},
      {"slice0", [&] { return probe(slice(a, 0, 1, 3)); }},
      {"slice1", [&] { return probe(slice(a, 1, 1, 3)); }},
      {"tanh", [&] { return probe(tanh(a)); }},
      {"sigmoid", [&] { return probe(sigmoid(a)); }},
      {"softmax0", [&] { return probe(softmax(a, 0)); }},
      {"softmax1", [&] { return probe(softmax(a, 1)); }},
      {"log_softmax0", [&] { return probe(log_softmax(a, 0)); }},
      {"log_softmax1", [&] { return probe(log_softmax(a, 1)); }},
      {"pick", [&] { return probe(pick(a, idx)); }},
      {"mean", [&] { return scale(mean(mul(a, c)), 3.0); }},
      {"embedding", [&] { return probe(embedding_lookup(a, ids)); }},
  };
  for (const auto& [name, f] : cases) {
    CAPTURE(name);
    CHECK(grad_check(f, {a, b, c, row}, 1e-5) <= 1e-5);
  }
}

TEST_CASE("grad_check examples") {
  Rng rng(12);
  const Var x = random_var(2, 3, rng);
  const Var w(Tensor::matrix(3, 1, {0.5, -2.0, 1.5}));
  CHECK(grad_check([&] { return sum(matmul(x, w)); }, {x}) <= 1e-9);

  const Var small = random_var(3, 3, rng, 0.1);
  CHECK(grad_check([&] { return probe(tanh(matmul(tanh(small), small))); }, {small}) <= 1e-5);

  // A custom op whose backward claims d/dx = 3x instead of 2x.
  auto bad_square = [](Var v) {
    Tensor out = v.value();
    for (auto& e : out.data()) e = e * e;
    return make_op("bad_square", out, {v}, [v](Node& self) mutable {
      auto& g = v.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * 3.0 * v.value()[i];
    });
  };
  CHECK(grad_check([&] { return sum(bad_square(x)); }, {x}) > 1e-2);
}

TEST_CASE("softmax rows and columns sum to one") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Var a = random_var(1 + uniform_index(rng, 6), 1 + uniform_index(rng, 6), rng, 20.0);
    const Tensor r = softmax(a, 1).value();
    const Tensor c = softmax(a, 0).value();
    for (std::size_t i = 0; i < r.rows(); ++i) {
      double s = 0;
      for (std::size_t j = 0; j < r.cols(); ++j) {
        CHECK(r(i, j) > 0);
        s += r(i, j);
      }
      CHECK(std::abs(s - 1.0) <= 1e-6);
    }
    for (std::size_t j = 0; j < c.cols(); ++j) {
      double s = 0;
      for (std::size_t i = 0; i < c.rows(); ++i) s += c(i, j);
      CHECK(std::abs(s - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("log_softmax is stable for large logits") {
  const Var a(Tensor::matrix(1, 3, {1000.0, 0.0, -1000.0}));
  const Tensor y = log_softmax(a, 1).value();
  CHECK(y[0] == doctest::Approx(0.0));
  CHECK(y[1] == doctest::Approx(-1000.0));
  CHECK(std::isfinite(y[2]));
}

TEST_CASE("no-grad mode records nothing") {
  Rng rng(14);
  const Var a = random_var(2, 2, rng);
  NoGradGuard guard;
  const Var b = tanh(matmul(a, a));
  CHECK(b.node()->inputs.empty());
  CHECK_FALSE(b.requires_grad());
}

TEST_CASE("embedding lookup rejects unknown ids") {
  const Var table(Tensor::zeros(3, 2));
  const std::int32_t bad[] = {3};
  CHECK_THROWS_AS(embedding_lookup(table, bad), ArgumentError);
}

TEST_CASE("forward passes are bit-deterministic") {
  auto run = [] {
    Rng rng(21);
    const Var a = random_var(4, 4, rng);
    Rng drop(22);
    return dropout(softmax(matmul(a, tanh(a)), 1), 0.3, drop, true).value();
  };
  CHECK(run() == run());
}

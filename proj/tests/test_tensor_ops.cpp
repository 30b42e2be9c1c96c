#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "soc/gradcheck.hpp"
#include "soc/ops.hpp"
#include "soc/random.hpp"
#include "soc/serialize.hpp"
#include "soc/tape.hpp"
#include "soc/tensor.hpp"

using namespace soc;

namespace {

Tensor rand_t(Rng& rng, Shape s, double scale = 1.0, bool rg = true) {
  Tensor t(std::move(s), 0.0, rg);
  for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = (2.0 * rng.uniform() - 1.0) * scale;
  return t;
}

// Reduces to a scalar with fixed non-uniform weights so backward sees varied
// output gradients.
Tensor weighted_sum(Tape& tape, const Tensor& x) {
  Tensor w(x.shape(), 0.0);
  for (int64_t i = 0; i < w.size(); ++i) w.data()[i] = 0.25 + std::sin(0.7 * static_cast<double>(i));
  return ops::sum(tape, ops::mul(tape, x, w));
}

void expect_grads(const std::vector<std::pair<std::string, Tensor>>& inputs,
                  const std::function<Tensor(Tape&)>& fn) {
  GradCheckResult res = grad_check(inputs, fn);
  CHECK_MESSAGE(res.pass, res.worst);
}

}  // namespace

TEST_CASE("tensor basics and contracts") {
  Tensor t(Shape{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(t.size() == 6);
  CHECK(t.at({1, 2}) == 6.0);
  CHECK_THROWS_AS(Tensor(Shape{2, 0}, 0.0), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{2, 3}, std::vector<double>{1, 2}), ShapeError);
  CHECK_THROWS_AS(t.value(), ContractError);
  CHECK(Tensor::scalar(4.5).value() == 4.5);

  Tensor c = t.clone();
  c.data()[0] = 42.0;
  CHECK(t.data()[0] == 1.0);

  Tensor d = t;
  CHECK(d.id() == t.id());
  CHECK(c.id() != t.id());
}

TEST_CASE("rng determinism and stream separation") {
  Rng a(7), b(7), c(8);
  for (int i = 0; i < 100; ++i) {
    double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(Rng::fold(1, "w1") != Rng::fold(1, "w2"));
  CHECK(Rng::fold(1, "w1") != Rng::fold(2, "w1"));
  CHECK(a.uniform() != c.uniform());
  double m = 0.0;
  Rng g(3);
  for (int i = 0; i < 10000; ++i) m += g.normal();
  CHECK(std::abs(m / 10000.0) < 0.05);
}

TEST_CASE("backward seeds and accumulates") {
  Rng rng(11);
  Tensor x = rand_t(rng, {5});
  Tape tape;
  Tensor loss = ops::sum(tape, x);
  tape.backward(loss);
  for (int i = 0; i < 5; ++i) CHECK(x.grad()[i] == 1.0);

  x.zero_grad();
  Tape t2;
  Tensor loss2 = ops::sum(t2, ops::mul(t2, x, x));
  t2.backward(loss2);
  for (int i = 0; i < 5; ++i) CHECK(x.grad()[i] == doctest::Approx(2.0 * x.data()[i]).epsilon(1e-12));

  Tape t3;
  CHECK_THROWS_AS(t3.backward(x), ContractError);
}

TEST_CASE("unused branch contributes nothing") {
  Rng rng(12);
  Tensor x = rand_t(rng, {4});
  Tape tape;
  Tensor used = ops::mul_scalar(tape, x, 3.0);
  Tensor unused = ops::sigmoid(tape, x);
  (void)unused;
  tape.backward(ops::sum(tape, used));
  for (int i = 0; i < 4; ++i) CHECK(x.grad()[i] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("softmax frozen values and invariants") {
  Tape tape(false);
  Tensor x(Shape{3}, std::vector<double>{1, 2, 3});
  Tensor y = ops::softmax(tape, x, 0);
  CHECK(y.data()[0] == doctest::Approx(0.09003057317038046).epsilon(1e-12));
  CHECK(y.data()[1] == doctest::Approx(0.24472847105479767).epsilon(1e-12));
  CHECK(y.data()[2] == doctest::Approx(0.6652409557748219).epsilon(1e-12));

  Rng rng(5);
  Tensor r = rand_t(rng, {4, 7}, 3.0, false);
  Tensor p = ops::softmax(tape, r, 1);
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int j = 0; j < 7; ++j) s += p.at({i, j});
    CHECK(std::abs(s - 1.0) < 1e-12);
  }

  Tensor shifted = ops::add_scalar(tape, r, 123.456);
  Tensor p2 = ops::softmax(tape, shifted, 1);
  for (int64_t i = 0; i < p.size(); ++i) CHECK(std::abs(p.data()[i] - p2.data()[i]) < 1e-12);
}

TEST_CASE("matmul frozen values") {
  Tape tape(false);
  Tensor a(Shape{2, 2}, std::vector<double>{1, 2, 3, 4});
  Tensor b(Shape{2, 1}, std::vector<double>{1, 1});
  Tensor c = ops::matmul(tape, a, b);
  CHECK(c.at({0, 0}) == 3.0);
  CHECK(c.at({1, 0}) == 7.0);

  Tensor eye(Shape{3, 3}, 0.0);
  for (int i = 0; i < 3; ++i) eye.at_mut({i, i}) = 1.0;
  Rng rng(9);
  Tensor m = rand_t(rng, {3, 3}, 2.0, false);
  Tensor im = ops::matmul(tape, eye, m);
  for (int64_t i = 0; i < m.size(); ++i) CHECK(im.data()[i] == m.data()[i]);

  Tensor p = rand_t(rng, {4, 4}, 1.0, false);
  Tensor q = rand_t(rng, {4, 4}, 1.0, false);
  Tensor r = rand_t(rng, {4, 4}, 1.0, false);
  Tensor left = ops::matmul(tape, ops::matmul(tape, p, q), r);
  Tensor right = ops::matmul(tape, p, ops::matmul(tape, q, r));
  for (int64_t i = 0; i < left.size(); ++i) CHECK(std::abs(left.data()[i] - right.data()[i]) < 1e-9);

  CHECK_THROWS_AS(ops::matmul(tape, a, Tensor(Shape{3, 2}, 0.0)), ShapeError);
}

TEST_CASE("layer_norm frozen values") {
  Tape tape(false);
  Tensor gamma(Shape{4}, 1.0), beta(Shape{4}, 0.0);
  Tensor x(Shape{4}, 3.25);
  Tensor y = ops::layer_norm(tape, x, gamma, beta);
  for (int i = 0; i < 4; ++i) CHECK(y.data()[i] == 0.0);

  Tensor g2(Shape{2}, 1.0), b2(Shape{2}, 0.0);
  Tensor x2(Shape{2}, std::vector<double>{1, 3});
  Tensor y2 = ops::layer_norm(tape, x2, g2, b2);
  double expect = 1.0 / std::sqrt(1.0 + 1e-5);
  CHECK(y2.data()[0] == doctest::Approx(-expect).epsilon(1e-12));
  CHECK(y2.data()[1] == doctest::Approx(expect).epsilon(1e-12));

  CHECK_THROWS_AS(ops::layer_norm(tape, x2, gamma, beta), ShapeError);
}

TEST_CASE("broadcasting matches manual expansion") {
  Tape tape(false);
  Tensor a(Shape{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  Tensor b(Shape{3}, std::vector<double>{10, 20, 30});
  Tensor c = ops::add(tape, a, b);
  CHECK(c.at({0, 0}) == 11.0);
  CHECK(c.at({1, 2}) == 36.0);

  Tensor col(Shape{2, 1}, std::vector<double>{100, 200});
  Tensor d = ops::mul(tape, a, col);
  CHECK(d.at({0, 2}) == 300.0);
  CHECK(d.at({1, 0}) == 800.0);

  CHECK(ops::broadcast_shape({4, 1, 3}, {2, 1}) == Shape{4, 2, 3});
  CHECK_THROWS_AS(ops::broadcast_shape({2, 3}, {4}), ShapeError);
}

TEST_CASE("extreme inputs stay finite") {
  Tape tape(false);
  Tensor big(Shape{6}, std::vector<double>{1e3, -1e3, 999.0, -999.0, 0.0, 1.0});
  CHECK(ops::sigmoid(tape, big).all_finite());
  CHECK(ops::softplus(tape, big).all_finite());
  CHECK(ops::softmax(tape, big, 0).all_finite());
  CHECK(ops::logsumexp(tape, big, 0).all_finite());
  CHECK(ops::relu(tape, big).all_finite());

  Tensor s = ops::sigmoid(tape, big);
  CHECK(s.data()[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.data()[1] == doctest::Approx(0.0).epsilon(1e-12));
  Tensor sp = ops::softplus(tape, big);
  CHECK(sp.data()[0] == doctest::Approx(1e3).epsilon(1e-12));
  CHECK(std::abs(sp.data()[1]) < 1e-12);
}

TEST_CASE("elementwise op gradients") {
  for (int inst = 0; inst < 5; ++inst) {
    Rng rng(100 + inst);
    Tensor a = rand_t(rng, {3, 4});
    Tensor b = rand_t(rng, {3, 4});
    Tensor c = rand_t(rng, {4});
    Tensor pos = rand_t(rng, {3, 4});
    for (int64_t i = 0; i < pos.size(); ++i) pos.data()[i] = 0.5 + rng.uniform();

    expect_grads({{"a", a}, {"b", b}},
                 [&](Tape& t) { return weighted_sum(t, ops::add(t, a, b)); });
    expect_grads({{"a", a}, {"b", b}},
                 [&](Tape& t) { return weighted_sum(t, ops::sub(t, a, b)); });
    expect_grads({{"a", a}, {"b", b}},
                 [&](Tape& t) { return weighted_sum(t, ops::mul(t, a, b)); });
    expect_grads({{"a", a}, {"pos", pos}},
                 [&](Tape& t) { return weighted_sum(t, ops::div(t, a, pos)); });
    expect_grads({{"a", a}, {"c", c}},
                 [&](Tape& t) { return weighted_sum(t, ops::mul(t, a, c)); });
    expect_grads({{"a", a}, {"b", b}},
                 [&](Tape& t) { return weighted_sum(t, ops::minimum(t, a, b)); });
    expect_grads({{"a", a}, {"b", b}},
                 [&](Tape& t) { return weighted_sum(t, ops::maximum(t, a, b)); });
    expect_grads({{"a", a}}, [&](Tape& t) { return weighted_sum(t, ops::relu(t, a)); });
    expect_grads({{"a", a}}, [&](Tape& t) { return weighted_sum(t, ops::sigmoid(t, a)); });
    expect_grads({{"a", a}}, [&](Tape& t) { return weighted_sum(t, ops::softplus(t, a)); });
    expect_grads({{"a", a}},
                 [&](Tape& t) { return weighted_sum(t, ops::add_scalar(t, a, 1.7)); });
    expect_grads({{"a", a}},
                 [&](Tape& t) { return weighted_sum(t, ops::mul_scalar(t, a, -2.3)); });
  }
}

TEST_CASE("reduction and normalization gradients") {
  for (int inst = 0; inst < 5; ++inst) {
    Rng rng(200 + inst);
    Tensor a = rand_t(rng, {3, 5});
    Tensor gamma = rand_t(rng, {5});
    Tensor beta = rand_t(rng, {5});

    expect_grads({{"a", a}}, [&](Tape& t) { return ops::sum(t, a); });
    expect_grads({{"a", a}}, [&](Tape& t) { return ops::mean(t, a); });
    expect_grads({{"a", a}}, [&](Tape& t) { return weighted_sum(t, ops::sum_axis(t, a, 0)); });
    expect_grads({{"a", a}}, [&](Tape& t) { return weighted_sum(t, ops::mean_axis(t, a, 1)); });
    expect_grads({{"a", a}}, [&](Tape& t) { return weighted_sum(t, ops::softmax(t, a, 1)); });
    expect_grads({{"a", a}}, [&](Tape& t) { return weighted_sum(t, ops::softmax(t, a, 0)); });
    expect_grads({{"a", a}}, [&](Tape& t) { return weighted_sum(t, ops::logsumexp(t, a, 1)); });
    expect_grads({{"a", a}, {"gamma", gamma}, {"beta", beta}},
                 [&](Tape& t) { return weighted_sum(t, ops::layer_norm(t, a, gamma, beta)); });
  }
}

TEST_CASE("matmul and linear gradients") {
  for (int inst = 0; inst < 5; ++inst) {
    Rng rng(300 + inst);
    Tensor a = rand_t(rng, {3, 4});
    Tensor b = rand_t(rng, {4, 2});
    Tensor x = rand_t(rng, {2, 3, 4});
    Tensor w = rand_t(rng, {5, 4});
    Tensor bias = rand_t(rng, {5});

    expect_grads({{"a", a}, {"b", b}},
                 [&](Tape& t) { return weighted_sum(t, ops::matmul(t, a, b)); });
    expect_grads({{"x", x}, {"w", w}, {"bias", bias}},
                 [&](Tape& t) { return weighted_sum(t, ops::linear(t, x, w, bias)); });
    expect_grads({{"x", x}, {"w", w}},
                 [&](Tape& t) { return weighted_sum(t, ops::linear(t, x, w, Tensor())); });
  }
}

TEST_CASE("gradient of sum(A*B) wrt A is ones times B transposed") {
  Rng rng(42);
  Tensor a = rand_t(rng, {3, 4});
  Tensor b = rand_t(rng, {4, 2}, 1.0, false);
  Tape tape;
  tape.backward(ops::sum(tape, ops::matmul(tape, a, b)));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      double expect = 0.0;
      for (int k = 0; k < 2; ++k) expect += b.at({j, k});
      CHECK(a.grad()[static_cast<size_t>(i) * 4 + j] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("shape op gradients and values") {
  for (int inst = 0; inst < 5; ++inst) {
    Rng rng(400 + inst);
    Tensor a = rand_t(rng, {2, 3, 4});
    Tensor b = rand_t(rng, {2, 2, 4});

    expect_grads({{"a", a}},
                 [&](Tape& t) { return weighted_sum(t, ops::reshape(t, a, {4, 6})); });
    expect_grads({{"a", a}},
                 [&](Tape& t) { return weighted_sum(t, ops::permute(t, a, {2, 0, 1})); });
    expect_grads({{"a", a}, {"b", b}}, [&](Tape& t) {
      return weighted_sum(t, ops::concat(t, {a, b}, 1));
    });
    expect_grads({{"a", a}},
                 [&](Tape& t) { return weighted_sum(t, ops::slice(t, a, 1, 1, 2)); });
    expect_grads({{"a", a}}, [&](Tape& t) {
      return weighted_sum(t, ops::index_select(t, a, 2, {3, 0, 0, 2}));
    });
  }

  Tape tape(false);
  Tensor m(Shape{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  Tensor mt = ops::transpose(tape, m);
  CHECK(mt.shape() == Shape{3, 2});
  CHECK(mt.at({0, 1}) == 4.0);
  CHECK(mt.at({2, 0}) == 3.0);

  Tensor s = ops::slice(tape, m, 1, 1, 2);
  CHECK(s.shape() == Shape{2, 2});
  CHECK(s.at({1, 0}) == 5.0);
  CHECK_THROWS_AS(ops::slice(tape, m, 1, 2, 2), ShapeError);

  Tensor cat = ops::concat(tape, {m, m}, 0);
  CHECK(cat.shape() == Shape{4, 3});
  CHECK(cat.at({3, 2}) == 6.0);

  CHECK_THROWS_AS(ops::reshape(tape, m, {5}), ShapeError);
}

TEST_CASE("embedding lookup and gradient") {
  Rng rng(17);
  Tensor table = rand_t(rng, {6, 3});
  Tape tape(false);
  Tensor e = ops::embedding(tape, table, {4, 0, 4});
  CHECK(e.shape() == Shape{3, 3});
  for (int j = 0; j < 3; ++j) {
    CHECK(e.at({0, j}) == table.at({4, j}));
    CHECK(e.at({1, j}) == table.at({0, j}));
  }
  CHECK_THROWS_AS(ops::embedding(tape, table, {6}), ShapeError);

  expect_grads({{"table", table}}, [&](Tape& t) {
    return weighted_sum(t, ops::embedding(t, table, {4, 0, 4, 1}));
  });
}

namespace {

double conv_ref(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad, int n,
                int co, int oy, int ox) {
  double acc = b.defined() ? b.data()[co] : 0.0;
  int cin = x.dim(1), h = x.dim(2), ww = x.dim(3), kh = w.dim(2), kw = w.dim(3);
  for (int ci = 0; ci < cin; ++ci) {
    for (int dy = 0; dy < kh; ++dy) {
      for (int dx = 0; dx < kw; ++dx) {
        int iy = oy * stride - pad + dy;
        int ix = ox * stride - pad + dx;
        if (iy < 0 || iy >= h || ix < 0 || ix >= ww) continue;
        acc += x.at({n, ci, iy, ix}) * w.at({co, ci, dy, dx});
      }
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("conv2d matches direct convolution") {
  Rng rng(21);
  for (auto [stride, pad, kh] : {std::tuple{1, 0, 1}, {1, 1, 3}, {2, 1, 3}}) {
    Tensor x = rand_t(rng, {2, 3, 6, 5}, 1.0, false);
    Tensor w = rand_t(rng, {4, 3, kh, kh}, 1.0, false);
    Tensor b = rand_t(rng, {4}, 1.0, false);
    Tape tape(false);
    Tensor y = ops::conv2d(tape, x, w, b, stride, pad);
    int ho = (6 + 2 * pad - kh) / stride + 1;
    int wo = (5 + 2 * pad - kh) / stride + 1;
    CHECK(y.shape() == Shape{2, 4, ho, wo});
    for (int n = 0; n < 2; ++n) {
      for (int co = 0; co < 4; ++co) {
        for (int oy = 0; oy < ho; ++oy) {
          for (int ox = 0; ox < wo; ++ox) {
            double ref = conv_ref(x, w, b, stride, pad, n, co, oy, ox);
            CHECK(y.at({n, co, oy, ox}) == doctest::Approx(ref).epsilon(1e-12));
          }
        }
      }
    }
  }
}

TEST_CASE("conv2d gradients") {
  for (int inst = 0; inst < 3; ++inst) {
    Rng rng(500 + inst);
    Tensor x = rand_t(rng, {2, 2, 5, 4});
    Tensor w = rand_t(rng, {3, 2, 3, 3});
    Tensor b = rand_t(rng, {3});
    expect_grads({{"x", x}, {"w", w}, {"b", b}}, [&](Tape& t) {
      return weighted_sum(t, ops::conv2d(t, x, w, b, 2, 1));
    });
    Tensor w1 = rand_t(rng, {3, 2, 1, 1});
    expect_grads({{"x", x}, {"w1", w1}}, [&](Tape& t) {
      return weighted_sum(t, ops::conv2d(t, x, w1, Tensor(), 1, 0));
    });
  }
}

TEST_CASE("upsample2x values and gradient") {
  Tape tape(false);
  Tensor c(Shape{1, 1, 2, 2}, 3.5);
  Tensor up = ops::upsample2x(tape, c);
  CHECK(up.shape() == Shape{1, 1, 4, 4});
  for (int64_t i = 0; i < up.size(); ++i) CHECK(up.data()[i] == doctest::Approx(3.5).epsilon(1e-12));

  Tensor x(Shape{1, 1, 2, 2}, std::vector<double>{0, 1, 2, 3});
  Tensor y = ops::upsample2x(tape, x);
  CHECK(y.at({0, 0, 0, 0}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(y.at({0, 0, 0, 3}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(y.at({0, 0, 3, 0}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(y.at({0, 0, 0, 1}) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(y.at({0, 0, 1, 1}) ==
        doctest::Approx(0.75 * (0.75 * 0 + 0.25 * 1) + 0.25 * (0.75 * 2 + 0.25 * 3)).epsilon(1e-10));

  for (int inst = 0; inst < 3; ++inst) {
    Rng rng(600 + inst);
    Tensor a = rand_t(rng, {1, 2, 3, 4});
    expect_grads({{"a", a}}, [&](Tape& t) { return weighted_sum(t, ops::upsample2x(t, a)); });
  }
}

TEST_CASE("avg_pool2d values and gradient") {
  Tape tape(false);
  Tensor x(Shape{1, 1, 2, 4}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
  Tensor y = ops::avg_pool2d(tape, x, 2, 2);
  CHECK(y.shape() == Shape{1, 1, 1, 2});
  CHECK(y.at({0, 0, 0, 0}) == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(y.at({0, 0, 0, 1}) == doctest::Approx(5.5).epsilon(1e-12));

  for (int inst = 0; inst < 3; ++inst) {
    Rng rng(700 + inst);
    Tensor a = rand_t(rng, {2, 2, 4, 6});
    expect_grads({{"a", a}}, [&](Tape& t) { return weighted_sum(t, ops::avg_pool2d(t, a, 2, 2)); });
  }
}

TEST_CASE("tensor serialization roundtrip") {
  Rng rng(31);
  Tensor t = rand_t(rng, {2, 3, 4}, 100.0, false);
  t.data()[0] = -0.0;
  t.data()[1] = 1e-300;

  std::string path = (std::filesystem::temp_directory_path() / "soc_roundtrip.bin").string();
  std::map<std::string, Tensor> named{{"alpha", t}, {"zeta", Tensor::scalar(9.0)}};
  save_tensor_map(path, named);
  auto back = load_tensor_map(path);
  REQUIRE(back.size() == 2);
  REQUIRE(back.count("alpha") == 1);
  CHECK(back.at("alpha").shape() == t.shape());
  for (int64_t i = 0; i < t.size(); ++i) {
    CHECK(std::memcmp(&back.at("alpha").data()[i], &t.data()[i], 8) == 0);
  }
  CHECK(back.at("zeta").value() == 9.0);
  std::filesystem::remove(path);
}

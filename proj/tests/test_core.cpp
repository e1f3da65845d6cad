#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "thermocae/grad_check.hpp"
#include "thermocae/kernels.hpp"
#include "thermocae/model.hpp"
#include "thermocae/msssim.hpp"
#include "thermocae/ops.hpp"
#include "thermocae/rng.hpp"

using namespace thermocae;

TEST_SUITE("core") {

TEST_CASE("rng streams are reproducible and well spread") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  CHECK(Rng(42).next() != c.next());
  CHECK(derive_seed(7, 0) != derive_seed(7, 1));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));

  Rng r(5);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.01);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(r.below(7));
  CHECK(seen.size() == 7);
  CHECK(*seen.rbegin() == 6);
}

TEST_CASE("tensor shape contract") {
  CHECK_THROWS_AS(Tensor({2, 0, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
  CHECK(t.all_finite());
  t[1] = std::nan("");
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("conv geometry halves and doubles") {
  ConvGeometry g;
  for (std::size_t in : {4u, 8u, 64u, 128u}) {
    g.in_h = g.in_w = in;
    CHECK(g.out_h() == in / 2);
    CHECK(transposed_out(in / 2, ConvSpec{}) == in);
  }
}

TEST_CASE("conv2d hand example [[4,6],[6,9]]") {
  Graph g;
  Var x = g.constant(Tensor({1, 1, 4, 4}, 1.0));
  Var w = g.constant(Tensor({1, 1, 3, 3}, 1.0));
  Var b = g.constant(Tensor({1}, 0.0));
  const Tensor& y = conv2d(x, w, b).value();
  REQUIRE(y.shape() == Shape{1, 1, 2, 2});
  CHECK(y[0] == 4.0);
  CHECK(y[1] == 6.0);
  CHECK(y[2] == 6.0);
  CHECK(y[3] == 9.0);
}

TEST_CASE("zero input gives bias everywhere") {
  Rng rng(3);
  Graph g;
  Var x = g.constant(Tensor({2, 3, 8, 8}, 0.0));
  Var w = g.constant(oracle::random_tensor({4, 3, 3, 3}, rng));
  Tensor bias({4});
  for (std::size_t i = 0; i < 4; ++i) bias[i] = 0.5 * static_cast<double>(i) - 1.0;
  Var b = g.constant(bias);
  const Tensor& y = conv2d(x, w, b).value();
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(y.at(n, c, i, j) == bias[c]);

  Var wt = g.constant(oracle::random_tensor({3, 4, 3, 3}, rng));
  const Tensor& yt = conv_transpose2d(g.constant(Tensor({1, 3, 2, 2}, 0.0)), wt, b).value();
  REQUIRE(yt.shape() == Shape{1, 4, 4, 4});
  for (std::size_t c = 0; c < 4; ++c) CHECK(yt.at(0, c, 3, 1) == bias[c]);
}

TEST_CASE("conv_transpose2d single pixel matches scatter oracle") {
  Graph g;
  const double v = 2.5;
  Var x = g.constant(Tensor({1, 1, 1, 1}, v));
  Tensor w({1, 1, 3, 3}, 1.0);
  Tensor b({1}, 0.0);
  const Tensor& y = conv_transpose2d(x, g.constant(w), g.constant(b)).value();
  REQUIRE(y.shape() == Shape{1, 1, 2, 2});
  const Tensor expect = oracle::conv_transpose2d(Tensor({1, 1, 1, 1}, v), w, b, 2, 1, 1);
  CHECK(oracle::max_abs_diff(y, expect) == 0.0);
  // Taps (1,1),(1,2),(2,1),(2,2) land inside the 2x2 output: sum 4v.
  double s = 0.0;
  for (double e : y.data()) s += e;
  CHECK(s == doctest::Approx(4 * v));
}

TEST_CASE("conv kernels agree with the loop oracle on random instances") {
  Rng rng(11);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t n = 1 + rng.below(3), cin = 1 + rng.below(4), cout = 1 + rng.below(4);
    const std::size_t h = 2 * (1 + rng.below(5)), w = 2 * (1 + rng.below(5));
    const Tensor x = oracle::random_tensor({n, cin, h, w}, rng);
    const Tensor k = oracle::random_tensor({cout, cin, 3, 3}, rng);
    const Tensor b = oracle::random_tensor({cout}, rng);
    const Tensor expect = oracle::conv2d(x, k, b, 2, 1);

    ConvGeometry geo{n, cin, h, w, cout, {}};
    Tensor fast(expect.shape()), ref(expect.shape());
    kernels::conv2d_forward(geo, x.data(), k.data(), b.data(), fast.data());
    kernels::reference::conv2d_forward(geo, x.data(), k.data(), b.data(), ref.data());
    REQUIRE(oracle::max_abs_diff(fast, expect) < 1e-12);
    REQUIRE(oracle::max_abs_diff(ref, expect) < 1e-12);

    // Transposed direction through the op, against the scatter oracle.
    Graph g;
    const Tensor kt = oracle::random_tensor({cin, cout, 3, 3}, rng);
    const Tensor xt = oracle::random_tensor({n, cin, h / 2, w / 2}, rng);
    const Tensor& yt = conv_transpose2d(g.constant(xt), g.constant(kt), g.constant(b)).value();
    REQUIRE(oracle::max_abs_diff(yt, oracle::conv_transpose2d(xt, kt, b, 2, 1, 1)) < 1e-12);
  }
}

TEST_CASE("conv backward kernels agree with reference") {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(3), cin = 1 + rng.below(4), cout = 1 + rng.below(4);
    const std::size_t h = 2 * (1 + rng.below(5)), w = 2 * (1 + rng.below(5));
    ConvGeometry geo{n, cin, h, w, cout, {}};
    const Tensor x = oracle::random_tensor({n, cin, h, w}, rng);
    const Tensor k = oracle::random_tensor({cout, cin, 3, 3}, rng);
    const Tensor dy = oracle::random_tensor({n, cout, geo.out_h(), geo.out_w()}, rng);
    Tensor dx1(x.shape()), dx2(x.shape()), dw1(k.shape()), dw2(k.shape()), db1({cout}), db2({cout});
    kernels::conv2d_backward_input(geo, dy.data(), k.data(), dx1.data());
    kernels::reference::conv2d_backward_input(geo, dy.data(), k.data(), dx2.data());
    kernels::conv2d_backward_weight(geo, x.data(), dy.data(), dw1.data(), db1.data());
    kernels::reference::conv2d_backward_weight(geo, x.data(), dy.data(), dw2.data(), db2.data());
    CHECK(oracle::max_abs_diff(dx1, dx2) < 1e-12);
    CHECK(oracle::max_abs_diff(dw1, dw2) < 1e-12);
    CHECK(oracle::max_abs_diff(db1, db2) < 1e-12);
  }
}

TEST_CASE("adjoint identity <conv(x), y> == <x, conv_t(y)>") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(2), c = 1 + rng.below(4), o = 1 + rng.below(4);
    const std::size_t h = 2 * (1 + rng.below(6)), w = 2 * (1 + rng.below(6));
    const Tensor x = oracle::random_tensor({n, c, h, w}, rng);
    const Tensor y = oracle::random_tensor({n, o, h / 2, w / 2}, rng);
    const Tensor k = oracle::random_tensor({o, c, 3, 3}, rng);
    // The transposed op takes [Cin_t, Cout_t] = [o, c]: the same array.
    Graph g;
    const Tensor& cx = conv2d(g.constant(x), g.constant(k), g.constant(Tensor({o}, 0.0))).value();
    const Tensor& ty = conv_transpose2d(g.constant(y), g.constant(k), g.constant(Tensor({c}, 0.0))).value();
    CHECK(std::abs(oracle::dot(cx, y) - oracle::dot(x, ty)) < 1e-10);
  }
}

TEST_CASE("dense examples and oracle") {
  Graph g;
  Tensor w({2, 2}, std::vector<double>{3, 0, 0, 3});
  const Tensor& y = dense(g.constant(Tensor({1, 2}, std::vector<double>{1, 2})), g.constant(w),
                          g.constant(Tensor({2}, 1.0)))
                        .value();
  CHECK(y[0] == 4.0);
  CHECK(y[1] == 7.0);

  Tensor eye({3, 3}, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  Rng rng(14);
  const Tensor x = oracle::random_tensor({4, 3}, rng);
  CHECK(dense(g.constant(x), g.constant(eye), g.constant(Tensor({3}, 0.0))).value() == x);

  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(5), f = 1 + rng.below(20), k = 1 + rng.below(10);
    const Tensor a = oracle::random_tensor({n, f}, rng), b = oracle::random_tensor({f, k}, rng),
                 c = oracle::random_tensor({k}, rng);
    Graph h;
    REQUIRE(oracle::max_abs_diff(dense(h.constant(a), h.constant(b), h.constant(c)).value(),
                                 oracle::dense(a, b, c)) < 1e-12);
    Tensor fast({n, k}), ref({n, k});
    kernels::reference::dense_forward(n, f, k, a.data(), b.data(), c.data(), ref.data());
    REQUIRE(oracle::max_abs_diff(ref, oracle::dense(a, b, c)) < 1e-12);
  }
}

TEST_CASE("shape errors are descriptive") {
  Graph g;
  Var x = g.constant(Tensor({1, 2, 4, 4}));
  Var w = g.constant(Tensor({3, 5, 3, 3}));
  Var b = g.constant(Tensor({3}));
  CHECK_THROWS_AS(conv2d(x, w, b), ShapeError);
  CHECK_THROWS_AS(dense(g.constant(Tensor({2, 3})), g.constant(Tensor({4, 2})), g.constant(Tensor({2}))), ShapeError);
  CHECK_THROWS_AS(add(g.constant(Tensor({2})), g.constant(Tensor({3}))), ShapeError);
}

TEST_CASE("activations") {
  Graph g;
  const Tensor& r = relu(g.constant(Tensor({3}, std::vector<double>{-1, 0, 2}))).value();
  CHECK(r == Tensor({3}, std::vector<double>{0, 0, 2}));
  const Tensor& s = sigmoid(g.constant(Tensor({5}, std::vector<double>{0, -800, 800, -30, 30}))).value();
  CHECK(s[0] == 0.5);
  for (double v : s.data()) CHECK((v >= 0.0 && v <= 1.0 && std::isfinite(v)));
  CHECK(s[3] > 0.0);
  CHECK(s[4] < 1.0);

  Parameter p{"x", Tensor({1}, 0.0), {}};
  Graph h;
  h.backward(sum(sigmoid(h.parameter(p))));
  CHECK(p.grad[0] == doctest::Approx(0.25).epsilon(1e-15));
  const double eps = 1e-6;
  const double fd = (1.0 / (1.0 + std::exp(-eps)) - 1.0 / (1.0 + std::exp(eps))) / (2 * eps);
  CHECK(std::abs(fd - 0.25) < 1e-9);
}

TEST_CASE("backward basics") {
  Parameter px{"x", Tensor({2}, std::vector<double>{-1, 2}), {}};
  Graph g;
  Var x = g.parameter(px);
  g.backward(sum(relu(x)));
  CHECK(g.grad(x.id) == Tensor({2}, std::vector<double>{0, 1}));
  CHECK(px.grad == g.grad(x.id));

  Parameter pz{"z", Tensor({2, 3}, 0.7), {}};
  Graph h;
  Var z = h.parameter(pz);
  Var c = h.constant(Tensor({2, 3}, 1.0));
  h.backward(sum(mul(z, c)));
  for (double v : pz.grad.data()) CHECK(v == 1.0);
  CHECK(h.grad(c.id).empty());
  CHECK_THROWS(h.backward(z));

  // Gradients are overwritten, not accumulated, across backward calls.
  Parameter p{"p", Tensor({3}, 2.0), {}};
  for (int rep = 0; rep < 2; ++rep) {
    Graph k;
    k.backward(sum(square(k.parameter(p))));
    for (double v : p.grad.data()) CHECK(v == 4.0);
  }
}

TEST_CASE("graph nodes are topologically ordered") {
  Graph g;
  Var a = g.constant(Tensor({2}, 1.0));
  Var b = mul(add(a, a), a);
  sum(b);
  for (std::size_t id = 0; id < g.size(); ++id)
    for (std::size_t in : g.inputs(id)) CHECK(in < id);
}

TEST_CASE("grad_check helper") {
  Rng rng(21);
  const Tensor x = oracle::random_tensor({4, 5}, rng);
  CHECK(grad_check([](Graph&, Var v) { return sum(square(v)); }, x) < 1e-8);
  CHECK(grad_check([](Graph& g, Var) { return g.constant(Tensor({1}, 3.0)); }, x) == 0.0);
}

TEST_CASE("every differentiable op matches finite differences") {
  Rng rng(22);
  GradCheckOptions opts;
  opts.samples = 30;
  const Tensor x4 = oracle::random_tensor({2, 2, 6, 6}, rng, 0.1, 1.0);
  const Tensor other = oracle::random_tensor({2, 2, 6, 6}, rng, 0.5, 1.5);
  const Tensor w = oracle::random_tensor({3, 2, 3, 3}, rng);
  const Tensor wt = oracle::random_tensor({2, 3, 3, 3}, rng);
  const Tensor bias = oracle::random_tensor({3}, rng);
  const std::vector<double> taps{0.25, 0.5, 0.25};
  auto weighted = [&](Graph& g, Var y) {
    // Random projection so that every output entry matters.
    Rng r(99);
    return sum(mul(y, g.constant(oracle::random_tensor(y.shape(), r))));
  };
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, conv2d(v, g.constant(w), g.constant(bias))); }, x4, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, conv2d(g.constant(x4), v, g.constant(bias))); }, w, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, conv2d(g.constant(x4), g.constant(w), v)); }, bias, opts) < 1e-6);
  const Tensor small = oracle::random_tensor({2, 2, 3, 3}, rng);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, conv_transpose2d(v, g.constant(wt), g.constant(bias))); }, small, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, conv_transpose2d(g.constant(small), v, g.constant(bias))); }, wt, opts) < 1e-6);
  const Tensor m = oracle::random_tensor({3, 4}, rng), dw = oracle::random_tensor({4, 2}, rng), db = oracle::random_tensor({2}, rng);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, dense(v, g.constant(dw), g.constant(db))); }, m, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, dense(g.constant(m), v, g.constant(db))); }, dw, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, sigmoid(v)); }, x4, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, relu(add_scalar(v, -0.5))); }, x4, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, mul(v, g.constant(other))); }, x4, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, div(v, g.constant(other))); }, x4, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, div(g.constant(other), v)); }, x4, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, sub(scale(v, 3.0), square(v))); }, x4, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, clamp_pow(add_scalar(v, -0.3), 0.7)); }, x4, opts) < 1e-4);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, separable_filter_valid(v, taps)); }, x4, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, avg_pool2(v)); }, x4, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, per_sample_mean(v)); }, x4, opts) < 1e-6);
  CHECK(grad_check([&](Graph& g, Var v) { return weighted(g, reshape(v, {2, 72})); }, x4, opts) < 1e-6);
  CHECK(grad_check([&](Graph&, Var v) { return mean(square(v)); }, x4, opts) < 1e-6);
}

TEST_CASE("full autoencoder gradient against central differences") {
  CaeModel model = CaeModel::build(CaeConfig{}, 7);
  Rng rng(23);
  Tensor x({1, 1, 128, 128});
  for (std::size_t i = 0; i < 128; ++i)
    for (std::size_t j = 0; j < 128; ++j)
      x.at(0, 0, i, j) = 0.5 + 0.3 * std::sin(0.1 * i) * std::cos(0.07 * j) + 0.05 * rng.uniform(-1, 1);
  std::vector<Parameter*> params;
  for (auto& p : model.parameters()) params.push_back(&p);
  GradCheckOptions opts;
  opts.samples = 50;
  const double err = grad_check(
      [&](Graph& g) {
        Var in = g.constant(x);
        return msssim_loss(in, model.forward(g, in));
      },
      params, opts);
  CHECK(err < 1e-4);
}

}  // TEST_SUITE

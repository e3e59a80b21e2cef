#include <doctest.h>

#include <cmath>

#include "fd_check.hpp"
#include "phase2vec/errors.hpp"
#include "phase2vec/parallel.hpp"
#include "phase2vec/rng.hpp"
#include "phase2vec/tape.hpp"
#include "phase2vec/tensor.hpp"

using namespace p2v;

TEST_CASE("tensor shape and data agree") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.numel() == 6);
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5, 0.0)), dimension_error);
  CHECK_THROWS_AS(Tensor({0, 3}), dimension_error);
  CHECK(t.all_finite());
  t[0] = std::nan("");
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("relu examples") {
  Tape tape;
  Var x = tape.leaf(Tensor({3}, {-1.0, 0.0, 2.0}));
  Var y = tape.relu(x);
  CHECK(tape.value(y)[0] == 0.0);
  CHECK(tape.value(y)[1] == 0.0);
  CHECK(tape.value(y)[2] == 2.0);

  Tape tape2;
  Var neg = tape2.leaf(Tensor({4}, {-3.0, -0.5, -1e9, -1e-12}));
  Var out = tape2.relu(neg);
  for (int i = 0; i < 4; ++i) CHECK(tape2.value(out)[i] == 0.0);
}

TEST_CASE("relu gradient is the positive-side indicator") {
  Tape tape;
  Tensor xt({1}, {3.0});
  xt.set_requires_grad(true);
  Var x = tape.leaf(xt);
  Var loss = tape.sum(tape.relu(x));
  tape.backward(loss);
  CHECK(tape.grad(x)[0] == 1.0);

  Tape tape2;
  Tensor nt({1}, {1.0});
  nt.set_requires_grad(true);
  Var xn = tape2.leaf(nt);
  // relu(-x) at x = 1 has zero gradient
  Var loss2 = tape2.sum(tape2.relu(tape2.scale(xn, -1.0)));
  tape2.backward(loss2);
  CHECK(tape2.grad(xn)[0] == 0.0);
}

TEST_CASE("backward of sum of squares") {
  Tape tape;
  Tensor xt({2}, {1.0, 2.0});
  xt.set_requires_grad(true);
  Var x = tape.leaf(xt);
  Var loss = tape.sum(tape.mul(x, x));
  tape.backward(loss);
  CHECK(tape.grad(x)[0] == doctest::Approx(2.0));
  CHECK(tape.grad(x)[1] == doctest::Approx(4.0));
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Tensor xt({2}, {1.0, 2.0});
  xt.set_requires_grad(true);
  Var x = tape.leaf(xt);
  CHECK_THROWS_AS(tape.backward(x), contract_error);
}

TEST_CASE("linear layer examples") {
  // identity weights, zero bias
  Tape tape;
  Var x = tape.leaf(Tensor({1, 2}, {3.0, -4.0}));
  Var w = tape.leaf(Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0}));
  Var b = tape.leaf(Tensor({2}, 0.0));
  Var y = tape.linear(x, w, b);
  CHECK(tape.value(y)[0] == 3.0);
  CHECK(tape.value(y)[1] == -4.0);

  // [1, 2] x [[1],[1]] + [0.5] = [3.5]
  Tape t2;
  Var x2 = t2.leaf(Tensor({1, 2}, {1.0, 2.0}));
  Var w2 = t2.leaf(Tensor({2, 1}, {1.0, 1.0}));
  Var b2 = t2.leaf(Tensor({1}, {0.5}));
  CHECK(t2.value(t2.linear(x2, w2, b2))[0] == doctest::Approx(3.5));

  // shape contract 4x100 * 100x20 -> 4x20
  Tape t3;
  Rng rng(1);
  Var x3 = t3.leaf(Tensor::uniform({4, 100}, -1, 1, rng));
  Var w3 = t3.leaf(Tensor::uniform({100, 20}, -1, 1, rng));
  Var b3 = t3.leaf(Tensor({20}, 0.0));
  const Tensor& y3 = t3.value(t3.linear(x3, w3, b3));
  CHECK(y3.shape() == std::vector<std::int64_t>{4, 20});

  Tape t4;
  Var bad = t4.leaf(Tensor({1, 3}, 0.0));
  Var wbad = t4.leaf(Tensor({2, 1}, 0.0));
  Var bbad = t4.leaf(Tensor({1}, 0.0));
  CHECK_THROWS_AS(t4.linear(bad, wbad, bbad), dimension_error);
}

TEST_CASE("conv output sizes follow the valid-convolution formula") {
  auto out_size = [](int s, int k, int stride) { return (s - k) / stride + 1; };
  CHECK(out_size(64, 3, 2) == 31);
  CHECK(out_size(31, 3, 2) == 15);
  CHECK(out_size(15, 3, 2) == 7);

  // Composing the three layers on a 64 input through real conv ops.
  Rng rng(7);
  Tape tape;
  Var x = tape.leaf(Tensor::uniform({1, 2, 64, 64}, -1, 1, rng));
  Var w1 = tape.leaf(Tensor::uniform({4, 2, 3, 3}, -1, 1, rng));
  Var b1 = tape.leaf(Tensor({4}, 0.0));
  Var a1 = tape.conv(x, w1, b1, 2);
  CHECK(tape.value(a1).shape() == std::vector<std::int64_t>{1, 4, 31, 31});
  Var w2 = tape.leaf(Tensor::uniform({4, 4, 3, 3}, -1, 1, rng));
  Var a2 = tape.conv(a1, w2, b1, 2);
  CHECK(tape.value(a2).shape() == std::vector<std::int64_t>{1, 4, 15, 15});
  Var a3 = tape.conv(a2, w2, b1, 2);
  CHECK(tape.value(a3).shape() == std::vector<std::int64_t>{1, 4, 7, 7});
}

TEST_CASE("conv value example: all-ones 3x3 kernel sums the patch") {
  Tape tape;
  Var x = tape.leaf(Tensor({1, 1, 3, 3}, 1.0));
  Var w = tape.leaf(Tensor({1, 1, 3, 3}, 1.0));
  Var b = tape.leaf(Tensor({1}, 0.0));
  Var y = tape.conv(x, w, b, 2);
  CHECK(tape.value(y).shape() == std::vector<std::int64_t>{1, 1, 1, 1});
  CHECK(tape.value(y)[0] == doctest::Approx(9.0));
}

TEST_CASE("conv validates channel agreement") {
  Tape tape;
  Var x = tape.leaf(Tensor({1, 3, 8, 8}, 0.0));
  Var w = tape.leaf(Tensor({4, 2, 3, 3}, 0.0));
  Var b = tape.leaf(Tensor({4}, 0.0));
  CHECK_THROWS_AS(tape.conv(x, w, b, 2), dimension_error);

  Var small = tape.leaf(Tensor({1, 2, 2, 2}, 0.0));
  Var w2 = tape.leaf(Tensor({4, 2, 3, 3}, 0.0));
  CHECK_THROWS_AS(tape.conv(small, w2, b, 2), dimension_error);
}

TEST_CASE("conv matches a hand-rolled reference on random 2-d input") {
  Rng rng(11);
  const int B = 2, Cin = 3, Cout = 4, H = 7, W = 6, k = 3, stride = 2;
  Tensor x = Tensor::uniform({B, Cin, H, W}, -1, 1, rng);
  Tensor wt = Tensor::uniform({Cout, Cin, k, k}, -1, 1, rng);
  Tensor bt = Tensor::uniform({Cout}, -1, 1, rng);
  Tape tape;
  Var y = tape.conv(tape.leaf(x), tape.leaf(wt), tape.leaf(bt), stride);
  const int OH = (H - k) / stride + 1, OW = (W - k) / stride + 1;
  for (int b = 0; b < B; ++b)
    for (int co = 0; co < Cout; ++co)
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow) {
          double want = bt[co];
          for (int ci = 0; ci < Cin; ++ci)
            for (int ki = 0; ki < k; ++ki)
              for (int kj = 0; kj < k; ++kj)
                want += x[((b * Cin + ci) * H + oh * stride + ki) * W + ow * stride + kj] *
                        wt[((co * Cin + ci) * k + ki) * k + kj];
          const double got = tape.value(y)[((b * Cout + co) * OH + oh) * OW + ow];
          CHECK(got == doctest::Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("3-d conv shape and finite-difference gradient") {
  Rng rng(13);
  Tensor x = Tensor::uniform({1, 2, 5, 5, 5}, -1, 1, rng);
  x.set_requires_grad(true);
  Tensor wt = Tensor::uniform({3, 2, 3, 3, 3}, -1, 1, rng);
  wt.set_requires_grad(true);
  Tensor bt = Tensor::uniform({3}, -0.5, 0.5, rng);

  Tape tape;
  Var xv = tape.leaf(x);
  Var wv = tape.leaf(wt);
  Var bv = tape.leaf(bt);
  Var y = tape.conv(xv, wv, bv, 2);
  CHECK(tape.value(y).shape() == std::vector<std::int64_t>{1, 3, 2, 2, 2});
  Var loss = tape.sum(tape.mul(y, y));
  tape.backward(loss);

  auto loss_with = [&](const Tensor& xd, const Tensor& wd) {
    Tape t;
    Var yy = t.conv(t.leaf(xd), t.leaf(wd), t.leaf(bt), 2);
    Var l = t.sum(t.mul(yy, yy));
    return t.value(l)[0];
  };
  Rng pick(3);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor xd = x;
    const std::int64_t i = static_cast<std::int64_t>(pick.uniform_int(static_cast<std::uint64_t>(x.numel())));
    const double fd = p2v::testing::central_difference([&] { return loss_with(xd, wt); }, &xd[i]);
    CHECK(p2v::testing::rel_error(tape.grad(xv)[i], fd) < 1e-4);

    Tensor wd = wt;
    const std::int64_t j = static_cast<std::int64_t>(pick.uniform_int(static_cast<std::uint64_t>(wt.numel())));
    const double fdw = p2v::testing::central_difference([&] { return loss_with(x, wd); }, &wd[j]);
    CHECK(p2v::testing::rel_error(tape.grad(wv)[j], fdw) < 1e-4);
  }
}

TEST_CASE("batch norm examples") {
  // per-channel mean 5, var 4 -> standardized output
  const int B = 2, C = 1, S = 2;
  Tensor x({B, C, S}, {3.0, 7.0, 3.0, 7.0});  // mean 5, var 4
  Tensor gamma({1}, 1.0), beta({1}, 0.0);
  gamma.set_requires_grad(true);
  Tensor rm({1}, 0.0), rv({1}, 1.0);
  Tape tape;
  Var y = tape.batch_norm(tape.leaf(x), tape.leaf(gamma), tape.leaf(beta), &rm, &rv, true, 0.1,
                          1e-5);
  double mean = 0.0;
  for (int i = 0; i < 4; ++i) mean += tape.value(y)[i];
  mean /= 4.0;
  double var = 0.0;
  for (int i = 0; i < 4; ++i) var += (tape.value(y)[i] - mean) * (tape.value(y)[i] - mean);
  var /= 4.0;
  CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // within the eps guard
  // running stats moved toward the batch statistics
  CHECK(rm[0] == doctest::Approx(0.9 * 0.0 + 0.1 * 5.0));

  // eval mode with identity running stats is the identity up to eps
  Tensor rm2({1}, 0.0), rv2({1}, 1.0);
  Tape t2;
  Var y2 = t2.batch_norm(t2.leaf(x), t2.leaf(gamma), t2.leaf(beta), &rm2, &rv2, false, 0.1, 1e-8);
  for (int i = 0; i < 4; ++i) CHECK(t2.value(y2)[i] == doctest::Approx(x[i]).epsilon(1e-6));

  // constant channel in train mode collapses to the shift
  Tensor xc({2, 1}, {4.0, 4.0});
  Tensor beta3({1}, {0.75});
  Tensor rm3({1}, 0.0), rv3({1}, 1.0);
  Tape t3;
  Var y3 = t3.batch_norm(t3.leaf(xc), t3.leaf(gamma), t3.leaf(beta3), &rm3, &rv3, true, 0.1, 1e-5);
  CHECK(t3.value(y3)[0] == doctest::Approx(0.75));
  CHECK(t3.value(y3)[1] == doctest::Approx(0.75));
}

TEST_CASE("batch norm rejects train mode with batch size 1") {
  Tensor x({1, 2}, {1.0, 2.0});
  Tensor gamma({2}, 1.0), beta({2}, 0.0);
  Tensor rm({2}, 0.0), rv({2}, 1.0);
  Tape tape;
  CHECK_THROWS_AS(
      tape.batch_norm(tape.leaf(x), tape.leaf(gamma), tape.leaf(beta), &rm, &rv, true, 0.1, 1e-5),
      config_error);
}

TEST_CASE("batch norm train-mode gradient matches finite differences") {
  Rng rng(17);
  Tensor x = Tensor::uniform({4, 3, 5}, -2, 2, rng);
  x.set_requires_grad(true);
  Tensor gamma = Tensor::uniform({3}, 0.5, 1.5, rng);
  gamma.set_requires_grad(true);
  Tensor beta = Tensor::uniform({3}, -0.5, 0.5, rng);
  beta.set_requires_grad(true);
  Tensor target = Tensor::uniform({4, 3, 5}, -1, 1, rng);

  auto loss_of = [&](const Tensor& xd, const Tensor& gd, const Tensor& bd) {
    Tensor rm({3}, 0.0), rv({3}, 1.0);  // fresh buffers; no update leakage
    Tape t;
    Var y = t.batch_norm(t.leaf(xd), t.leaf(gd), t.leaf(bd), &rm, &rv, true, 0.1, 1e-5, false);
    Var d = t.sub(y, t.constant(target));
    Var l = t.sum(t.mul(d, d));
    return t.value(l)[0];
  };

  Tensor rm({3}, 0.0), rv({3}, 1.0);
  Tape tape;
  Var xv = tape.leaf(x);
  Var gv = tape.leaf(gamma);
  Var bv = tape.leaf(beta);
  Var y = tape.batch_norm(xv, gv, bv, &rm, &rv, true, 0.1, 1e-5, false);
  Var d = tape.sub(y, tape.constant(target));
  Var loss = tape.sum(tape.mul(d, d));
  tape.backward(loss);

  Rng pick(5);
  for (int trial = 0; trial < 6; ++trial) {
    Tensor xd = x;
    const std::int64_t i = static_cast<std::int64_t>(pick.uniform_int(static_cast<std::uint64_t>(x.numel())));
    const double fd = p2v::testing::central_difference([&] { return loss_of(xd, gamma, beta); }, &xd[i]);
    CHECK(p2v::testing::rel_error(tape.grad(xv)[i], fd) < 1e-4);
  }
  for (int c = 0; c < 3; ++c) {
    Tensor gd = gamma;
    const double fdg = p2v::testing::central_difference([&] { return loss_of(x, gd, beta); }, &gd[c]);
    CHECK(p2v::testing::rel_error(tape.grad(gv)[c], fdg) < 1e-4);
    Tensor bd = beta;
    const double fdb = p2v::testing::central_difference([&] { return loss_of(x, gamma, bd); }, &bd[c]);
    CHECK(p2v::testing::rel_error(tape.grad(bv)[c], fdb) < 1e-4);
  }
}

TEST_CASE("dropout eval mode is the bitwise identity") {
  Rng rng(23);
  Tensor x = Tensor::uniform({4, 8}, -1, 1, rng);
  Tape tape;
  Var xv = tape.leaf(x);
  Rng drop_rng(1);
  Var y = tape.dropout(xv, 0.1, false, drop_rng);
  const Tensor& yv = tape.value(y);
  for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(yv[i] == x[i]);
}

TEST_CASE("dropout rate 0 in train mode is the identity") {
  Rng rng(29);
  Tensor x = Tensor::uniform({2, 6}, -1, 1, rng);
  Tape tape;
  Rng drop_rng(2);
  Var y = tape.dropout(tape.leaf(x), 0.0, true, drop_rng);
  for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(tape.value(y)[i] == x[i]);
}

TEST_CASE("dropout rejects rates outside [0,1)") {
  Tape tape;
  Rng rng(1);
  Var x = tape.leaf(Tensor({2, 2}, 1.0));
  CHECK_THROWS_AS(tape.dropout(x, 1.0, true, rng), config_error);
  CHECK_THROWS_AS(tape.dropout(x, -0.1, true, rng), config_error);
}

TEST_CASE("dropout statistics over a million elements") {
  const std::int64_t n = 1000000;
  Tensor x({1, n}, 1.0);
  Tape tape;
  Rng rng(31);
  Var y = tape.dropout(tape.leaf(x), 0.1, true, rng);
  const Tensor& yv = tape.value(y);
  std::int64_t zeros = 0;
  double mean = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (yv[i] == 0.0) ++zeros;
    mean += yv[i];
  }
  mean /= static_cast<double>(n);
  const double zero_frac = static_cast<double>(zeros) / static_cast<double>(n);
  CHECK(zero_frac == doctest::Approx(0.1).epsilon(0.02));  // 0.1 +- 0.002
  CHECK(std::abs(zero_frac - 0.1) < 0.002);
  CHECK(mean == doctest::Approx(1.0).epsilon(0.01));  // survivor scaling preserves the mean
}

TEST_CASE("fused recon loss examples and gradient") {
  // Single-point field: truth (1,0), recon from xi with phi = [1] (constant
  // monomial only is enough to steer the reconstruction).
  Tensor phi({1, 1}, 1.0);            // N=1, p=1
  Tensor truth({1, 2}, {1.0, 0.0});   // B=1, N*q=2
  Tensor xi({1, 2}, {0.0, 0.0});      // recon = (0, 0)
  xi.set_requires_grad(true);
  Tape tape;
  Var xv = tape.leaf(xi);
  Var loss = tape.field_recon_loss(xv, truth, phi, 2, 1e-5, NormMode::pointwise);
  CHECK(tape.value(loss)[0] == doctest::Approx(1.0 / (1.0 + 1e-5)).epsilon(1e-12));

  // identical reconstruction gives zero loss
  Tensor xi2({1, 2}, {1.0, 0.0});
  Tape t2;
  Var l2 = t2.field_recon_loss(t2.leaf(xi2), truth, phi, 2, 1e-5, NormMode::pointwise);
  CHECK(t2.value(l2)[0] == 0.0);

  // gradient vs finite differences on a random configuration
  Rng rng(37);
  const int N = 9, p = 4, q = 2, B = 3;
  Tensor phi3 = Tensor::uniform({N, p}, -1, 1, rng);
  Tensor truth3 = Tensor::uniform({B, N * q}, -2, 2, rng);
  Tensor xi3 = Tensor::uniform({B, p * q}, -1, 1, rng);
  xi3.set_requires_grad(true);
  for (NormMode mode : {NormMode::pointwise, NormMode::none, NormMode::global_ratio}) {
    Tape t3;
    Var x3 = t3.leaf(xi3);
    Var l3 = t3.field_recon_loss(x3, truth3, phi3, q, 1e-5, mode);
    t3.backward(l3);
    auto loss_of = [&](const Tensor& xd) {
      Tape tt;
      Var l = tt.field_recon_loss(tt.leaf(xd), truth3, phi3, q, 1e-5, mode);
      return tt.value(l)[0];
    };
    Rng pick(41);
    for (int trial = 0; trial < 8; ++trial) {
      Tensor xd = xi3;
      const std::int64_t i = static_cast<std::int64_t>(pick.uniform_int(static_cast<std::uint64_t>(xi3.numel())));
      const double fd = p2v::testing::central_difference([&] { return loss_of(xd); }, &xd[i]);
      CHECK(p2v::testing::rel_error(t3.grad(x3)[i], fd) < 1e-4);
    }
  }
}

TEST_CASE("l1 mean and its subgradient") {
  Tensor x({1, 4}, {1.0, -2.0, 0.0, 0.5});
  x.set_requires_grad(true);
  Tape tape;
  Var xv = tape.leaf(x);
  Var l = tape.l1_mean(xv);
  CHECK(tape.value(l)[0] == doctest::Approx(3.5));
  tape.backward(l);
  CHECK(tape.grad(xv)[0] == 1.0);
  CHECK(tape.grad(xv)[1] == -1.0);
  CHECK(tape.grad(xv)[2] == 0.0);
  CHECK(tape.grad(xv)[3] == 1.0);
}

TEST_CASE("composite network gradient matches finite differences") {
  // conv -> bn -> relu -> flatten -> linear -> recon loss, 100 random coords.
  Rng rng(43);
  const int B = 2;
  Tensor input = Tensor::uniform({B, 2, 8, 8}, -1, 1, rng);
  Tensor w1 = Tensor::uniform({4, 2, 3, 3}, -0.5, 0.5, rng);
  Tensor b1 = Tensor::uniform({4}, -0.1, 0.1, rng);
  Tensor gamma = Tensor::uniform({4}, 0.8, 1.2, rng);
  Tensor beta = Tensor::uniform({4}, -0.2, 0.2, rng);
  const int flat = 4 * 3 * 3;
  Tensor w2 = Tensor::uniform({flat, 6}, -0.5, 0.5, rng);
  Tensor b2 = Tensor::uniform({6}, -0.1, 0.1, rng);
  Tensor phi = Tensor::uniform({5, 3}, -1, 1, rng);    // N=5, p=3
  Tensor truth = Tensor::uniform({B, 10}, -2, 2, rng); // q=2
  for (Tensor* t : {&w1, &b1, &gamma, &beta, &w2, &b2}) t->set_requires_grad(true);

  auto build = [&](Tape& t, const Tensor& w1d, const Tensor& b1d, const Tensor& gd,
                   const Tensor& bd, const Tensor& w2d, const Tensor& b2d,
                   std::vector<Var>* leaves) {
    Tensor rm({4}, 0.0), rv({4}, 1.0);
    Var x = t.constant(input);
    Var vw1 = t.leaf(w1d), vb1 = t.leaf(b1d), vg = t.leaf(gd), vb = t.leaf(bd);
    Var vw2 = t.leaf(w2d), vb2 = t.leaf(b2d);
    if (leaves) *leaves = {vw1, vb1, vg, vb, vw2, vb2};
    Var h = t.conv(x, vw1, vb1, 2);
    h = t.batch_norm(h, vg, vb, &rm, &rv, true, 0.1, 1e-5, false);
    h = t.relu(h);
    h = t.reshape(h, {B, flat});
    Var xi = t.linear(h, vw2, vb2);
    Var rec = t.field_recon_loss(xi, truth, phi, 2, 1e-5, NormMode::pointwise);
    Var l1 = t.l1_mean(xi);
    return t.add_scaled(rec, 1.0, l1, 1e-3);
  };

  Tape tape;
  std::vector<Var> leaves;
  Var loss = build(tape, w1, b1, gamma, beta, w2, b2, &leaves);
  tape.backward(loss);

  // The L1 term is non-differentiable at xi = 0; the chosen seed keeps every
  // decoded coefficient clear of the kink.
  {
    Tape probe;
    Tensor rm({4}, 0.0), rv({4}, 1.0);
    Var h = probe.conv(probe.constant(input), probe.leaf(w1), probe.leaf(b1), 2);
    h = probe.batch_norm(h, probe.leaf(gamma), probe.leaf(beta), &rm, &rv, true, 0.1, 1e-5, false);
    h = probe.relu(h);
    h = probe.reshape(h, {B, flat});
    const Tensor& xi = probe.value(probe.linear(h, probe.leaf(w2), probe.leaf(b2)));
    for (std::int64_t i = 0; i < xi.numel(); ++i) REQUIRE(std::abs(xi[i]) > 1e-3);
  }

  std::vector<Tensor*> params{&w1, &b1, &gamma, &beta, &w2, &b2};
  Rng pick(47);
  for (int checked = 0; checked < 100; ++checked) {
    const std::size_t pi = static_cast<std::size_t>(pick.uniform_int(params.size()));
    Tensor copy = *params[pi];
    const std::int64_t ci =
        static_cast<std::int64_t>(pick.uniform_int(static_cast<std::uint64_t>(copy.numel())));
    auto loss_of = [&]() {
      Tape t;
      std::vector<Tensor> local{w1, b1, gamma, beta, w2, b2};
      local[pi] = copy;
      Var l = build(t, local[0], local[1], local[2], local[3], local[4], local[5], nullptr);
      return t.value(l)[0];
    };
    const double fd = p2v::testing::central_difference(loss_of, &copy[ci]);
    const double got = tape.grad(leaves[pi])[ci];
    CHECK(p2v::testing::grad_close(got, fd));
  }
}

TEST_CASE("forward and backward are deterministic across repeated runs") {
  Rng rng(53);
  Tensor input = Tensor::uniform({2, 2, 8, 8}, -1, 1, rng);
  Tensor w = Tensor::uniform({4, 2, 3, 3}, -0.5, 0.5, rng);
  w.set_requires_grad(true);
  Tensor b = Tensor::uniform({4}, -0.1, 0.1, rng);

  auto run = [&](int threads) {
    set_thread_count(threads);
    Tape tape;
    Var wv = tape.leaf(w);
    Var y = tape.conv(tape.constant(input), wv, tape.leaf(b), 2);
    Var loss = tape.sum(tape.mul(y, y));
    tape.backward(loss);
    std::vector<double> out = tape.value(loss).vec();
    const Tensor& g = tape.grad(wv);
    out.insert(out.end(), g.vec().begin(), g.vec().end());
    set_thread_count(0);
    return out;
  };
  const auto a = run(1);
  const auto b1t = run(1);
  const auto c = run(2);
  CHECK(a == b1t);
  CHECK(a == c);  // fixed-chunk reductions make the worker count irrelevant
}

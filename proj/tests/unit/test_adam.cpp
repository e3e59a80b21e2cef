#include <doctest.h>

#include <cmath>

#include "phase2vec/adam.hpp"
#include "phase2vec/errors.hpp"

using namespace p2v;

namespace {

ParamSet one_param(double value) {
  ParamSet ps;
  ps.add("w", Tensor({2}, value));
  return ps;
}

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged") {
  ParamSet ps = one_param(1.25);
  AdamState state = AdamState::init(ps, 1e-2);
  Tensor g({2}, 0.0);
  for (int i = 0; i < 10; ++i) adam_step(ps, {&g}, state);
  CHECK(ps.get("w")[0] == 1.25);
  CHECK(ps.get("w")[1] == 1.25);
  CHECK(state.step == 10);
}

TEST_CASE("first step with unit gradient moves by about the learning rate") {
  ParamSet ps = one_param(0.0);
  AdamState state = AdamState::init(ps, 1e-4);
  Tensor g({2}, 1.0);
  adam_step(ps, {&g}, state);
  // bias-corrected first step: m_hat = 1, v_hat = 1 -> step = lr/(1+eps)
  CHECK(ps.get("w")[0] == doctest::Approx(-1e-4).epsilon(1e-6));
}

TEST_CASE("constant gradient drives a steady march against its sign") {
  ParamSet ps = one_param(0.0);
  AdamState state = AdamState::init(ps, 1e-3);
  Tensor g({2}, {2.5, -2.5});
  double prev0 = 0.0;
  for (int i = 0; i < 200; ++i) {
    adam_step(ps, {&g}, state);
    if (i > 20) {
      const double step0 = ps.get("w")[0] - prev0;
      // per-step magnitude approaches lr, direction opposite sign(g)
      CHECK(step0 < 0.0);
      CHECK(std::abs(std::abs(step0) - 1e-3) < 1e-4);
    }
    prev0 = ps.get("w")[0];
  }
  CHECK(ps.get("w")[0] < -0.15);
  CHECK(ps.get("w")[1] > 0.15);
}

TEST_CASE("gradient shape mismatches are rejected") {
  ParamSet ps = one_param(0.0);
  AdamState state = AdamState::init(ps, 1e-3);
  Tensor bad({3}, 1.0);
  CHECK_THROWS_AS(adam_step(ps, {&bad}, state), dimension_error);
  Tensor g({2}, 1.0);
  CHECK_THROWS_AS(adam_step(ps, {&g, &g}, state), dimension_error);
}

TEST_CASE("buffers are excluded from the optimizer") {
  ParamSet ps;
  ps.add("w", Tensor({2}, 1.0));
  ps.add("running", Tensor({2}, 5.0), /*trainable=*/false);
  AdamState state = AdamState::init(ps, 1e-2);
  CHECK(state.m.size() == 1);
  Tensor g({2}, 1.0);
  adam_step(ps, {&g}, state);
  CHECK(ps.get("running")[0] == 5.0);
  CHECK(ps.get("w")[0] < 1.0);
}

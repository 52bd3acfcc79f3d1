#include <cmath>

#include "doctest.h"
#include "exist/gradcheck.hpp"
#include "exist/tape.hpp"

using namespace exist;
using T2 = Tensor<double>;

TEST_CASE("sum of an identity dense layer has unit input gradient") {
  Tape<double> tape;
  Parameter<double> w("w", T2({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  Parameter<double> b("b", T2({3}));
  const Var x = tape.constant(T2({2, 3}, {1, -2, 3, 0.5, 0, 4}));
  const Var loss = nn::sum(tape, nn::dense(tape, x, w, b));
  tape.backward(loss);
  for (double g : tape.grad(x).data) CHECK(g == 1.0);
  CHECK(b.grad.data == std::vector<double>{2, 2, 2});
}

TEST_CASE("max pool routes gradient to the first argmax only") {
  Tape<double> tape;
  const Var x = tape.constant(T2({1, 3, 2}, {1, 5, 4, 5, 4, 0}));
  tape.backward(nn::sum(tape, nn::max_pool_time(tape, x)));
  CHECK(tape.grad(x).data == std::vector<double>{0, 1, 1, 0, 0, 0});
}

TEST_CASE("frozen parameters accumulate nothing") {
  Tape<double> tape;
  Parameter<double> w("w", T2({2, 1}, {1, 1}), true);
  Parameter<double> b("b", T2({1}));
  const Var x = tape.constant(T2({1, 2}, {3, 4}));
  tape.backward(nn::sum(tape, nn::dense(tape, x, w, b)));
  for (double g : w.grad.data) CHECK(g == 0.0);
  CHECK(b.grad[0] == 1.0);
}

TEST_CASE("embedding lookup never updates the PAD row") {
  Tape<double> tape;
  Parameter<double> table("e", T2({3, 2}, {0, 0, 1, 2, 3, 4}));
  const std::vector<std::int32_t> ids = {2, 0, 2, 1};
  const Var e = nn::embedding(tape, table, ids, 2, 2);
  CHECK(tape.value(e).data == std::vector<double>{3, 4, 0, 0, 3, 4, 1, 2});
  tape.backward(nn::sum(tape, e));
  CHECK(table.grad.data == std::vector<double>{0, 0, 1, 1, 2, 2});
}

TEST_CASE("masked mean, concat, relu") {
  Tape<double> tape;
  const Var x = tape.constant(T2({2, 3, 1}, {1, 2, 9, 4, 9, 9}));
  const std::vector<std::size_t> lengths = {2, 1};
  const Var m = nn::masked_mean(tape, x, lengths);
  CHECK(tape.value(m).data == std::vector<double>{1.5, 4});
  const Var r = nn::relu(tape, tape.constant(T2({2, 1}, {-1, 2})));
  const std::vector<Var> parts = {m, r};
  const Var c = nn::concat<double>(tape, parts);
  CHECK(tape.value(c).data == std::vector<double>{1.5, 0, 4, 2});
  tape.backward(nn::sum(tape, c));
  CHECK(tape.grad(x).data == std::vector<double>{0.5, 0.5, 0, 1, 0, 0});
}

TEST_CASE("dropout is identity at inference and inverted in training") {
  Tape<double> tape;
  Rng rng(5);
  const Var x = tape.constant(T2({1, 1000}, 1.0));
  const Var same = nn::dropout(tape, x, 0.5, rng, false);
  CHECK(tape.value(same).data == tape.value(x).data);
  const Var dropped = nn::dropout(tape, x, 0.5, rng, true);
  const auto& y = tape.value(dropped);
  std::size_t kept = 0;
  for (double v : y.data) {
    CHECK((v == 0.0 || v == 2.0));
    kept += v != 0.0;
  }
  CHECK(kept > 400);
  CHECK(kept < 600);
}

TEST_CASE("logit cross-entropy matches the probability-domain value") {
  Tape<double> tape;
  const Var z = tape.constant(T2({2, 1}, {0.0, 1.3}));
  const std::vector<int> y = {1, 0};
  const double l = tape.value(nn::cross_entropy_with_logits(tape, z, y))[0];
  const double p2 = 1.0 / (1.0 + std::exp(-1.3));
  CHECK(l == doctest::Approx((std::log(2.0) - std::log(1.0 - p2)) / 2.0).epsilon(1e-14));

  const Var z6 = tape.constant(T2({1, 6}));
  const std::vector<int> t = {3};
  CHECK(tape.value(nn::cross_entropy_with_logits(tape, z6, t))[0] == doctest::Approx(std::log(6.0)));
}

TEST_CASE("gradient check of a linear model is exact") {
  Parameter<double> w("w", T2({4, 3}));
  Parameter<double> b("b", T2({3}));
  Rng rng(9);
  for (auto& v : w.value.data) v = rng.uniform(-1, 1);
  T2 xv({5, 4});
  for (auto& v : xv.data) v = rng.uniform(-1, 1);
  std::vector<Parameter<double>*> params = {&w, &b};
  const auto result = gradient_check(params, [&](bool with_grad) {
    Tape<double> tape;
    const Var loss = nn::sum(tape, nn::dense(tape, tape.constant(xv), w, b));
    if (with_grad) tape.backward(loss);
    return tape.value(loss)[0];
  });
  CHECK(result.coordinates == 15);
  CHECK(result.max_relative_error < 1e-9);
}

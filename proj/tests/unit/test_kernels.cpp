#include <cmath>

#include "doctest.h"
#include "exist/errors.hpp"
#include "exist/kernels.hpp"

using namespace exist;
using T2 = Tensor<double>;

TEST_CASE("dense forward") {
  const T2 x({1, 2}, {1, 2});
  CHECK(dense_forward(x, T2({2, 2}, {1, 0, 0, 1}), T2({2}, {0, 0})).data == std::vector<double>{1, 2});
  CHECK(dense_forward(x, T2({2, 2}), T2({2}, {3, 4})).data == std::vector<double>{3, 4});
  CHECK(dense_forward(x, T2({2, 1}, {1, 1}), T2({1}, {0.5})).data == std::vector<double>{3.5});
  CHECK_THROWS_AS(dense_forward(x, T2({3, 1}), T2({1})), ShapeError);
}

TEST_CASE("dense backward of a summed identity map gives ones") {
  const T2 x({2, 3}, {1, 2, 3, 4, 5, 6});
  const T2 w({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  T2 dx({2, 3});
  T2 dw({3, 3});
  T2 db({3});
  dense_backward(x, w, T2({2, 3}, 1.0), &dx, &dw, &db);
  for (double v : dx.data) CHECK(v == 1.0);
  CHECK(db.data == std::vector<double>{2, 2, 2});
  CHECK(dw.data[0] == 5.0);  // sum over batch of x[:,0]
}

TEST_CASE("conv1d forward") {
  const T2 x({1, 3, 1}, {1, 2, 3});
  CHECK(conv1d_forward(x, T2({1, 2, 1}, {1, 1}), T2({1})).data == std::vector<double>{3, 5});
  for (double v : conv1d_forward(x, T2({2, 2, 1}), T2({2})).data) CHECK(v == 0.0);
  CHECK(conv1d_forward(x, T2({1, 3, 1}, 1.0), T2({1})).data == std::vector<double>{6});
  CHECK_THROWS_AS(conv1d_forward(x, T2({1, 4, 1}), T2({1})), ShapeError);
}

TEST_CASE("conv1d with a multi-dimensional input matches a direct sum") {
  // B=1, L=4, D=2, one filter of width 2.
  const T2 x({1, 4, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
  const T2 f({1, 2, 2}, {1, -1, 2, 0.5});
  const auto y = conv1d_forward(x, f, T2({1}, {0.25}));
  REQUIRE(y.shape == Shape{1, 3, 1});
  for (std::size_t t = 0; t < 3; ++t) {
    const double expect = x[2 * t] * 1 - x[2 * t + 1] + 2 * x[2 * t + 2] + 0.5 * x[2 * t + 3] + 0.25;
    CHECK(y[t] == doctest::Approx(expect));
  }
}

TEST_CASE("max pool over time") {
  const auto r = max_pool_over_time(T2({1, 2, 2}, {1, 4, 3, 2}));
  CHECK(r.out.data == std::vector<double>{3, 4});
  CHECK(max_pool_over_time(T2({1, 1, 2}, {-5, 7})).out.data == std::vector<double>{-5, 7});
  CHECK(max_pool_over_time(T2({1, 2, 1}, {-3, -2})).out.data == std::vector<double>{-2});
  CHECK_THROWS_AS(max_pool_over_time(T2({1, 0, 2})), ShapeError);

  const auto ties = max_pool_over_time(T2({1, 3, 1}, {2, 2, 1}));
  T2 dx({1, 3, 1});
  max_pool_backward(Shape{1, 3, 1}, ties.argmax, T2({1, 1}, 1.0), dx);
  CHECK(dx.data == std::vector<double>{1, 0, 0});
}

TEST_CASE("LSTM with zero weights stays at zero") {
  const std::size_t h = 3;
  const T2 wx({2, 4 * h}), wh({h, 4 * h}), b({4 * h});
  const LstmWeightsView<double> view{wx, wh, b};
  const T2 x({2, 5, 2}, 0.7);
  const std::vector<std::size_t> lengths = {5, 3};
  const auto out = lstm_forward<double>(x, view, nullptr, lengths);
  CHECK(out.shape == Shape{2, h});
  for (double v : out.data) CHECK(v == 0.0);
  CHECK(lstm_forward<double>(x, view, &view, lengths).shape == Shape{2, 2 * h});
}

TEST_CASE("single LSTM cell against a step-by-step oracle") {
  for (double bg : {-2.0, -0.3, 0.0, 0.8, 1.7}) {
    // Gate order i, f, g, o.
    const T2 wx({1, 4}), wh({1, 4});
    const T2 b({4}, {30.0, -30.0, bg, 30.0});
    const LstmWeightsView<double> view{wx, wh, b};
    const std::vector<std::size_t> len = {1};
    const double h = lstm_forward<double>(T2({1, 1, 1}, 123.0), view, nullptr, len)[0];

    const auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double i = sig(30.0), f = sig(-30.0), g = std::tanh(bg), o = sig(30.0);
    const double c = f * 0.0 + i * g;
    CHECK(h == doctest::Approx(o * std::tanh(c)).epsilon(1e-12));
    CHECK(h == doctest::Approx(std::tanh(std::tanh(bg))).epsilon(1e-9));
  }
}

TEST_CASE("reverse direction reads each sequence from its last real step") {
  const T2 wx({1, 4}, {1.0, 0.0, 1.0, 0.0}), wh({1, 4}), b({4});
  const LstmWeightsView<double> view{wx, wh, b};
  // Example 0 has 2 real steps followed by padding that must be ignored.
  const T2 x({1, 4, 1}, {0.3, -0.6, 9.0, 9.0});
  const std::vector<std::size_t> len = {2};
  const auto rev = lstm_direction_forward<double>(x, view, len, true, nullptr);
  const T2 manual({1, 2, 1}, {-0.6, 0.3});
  const std::vector<std::size_t> len2 = {2};
  const auto fwd = lstm_direction_forward<double>(manual, view, len2, false, nullptr);
  CHECK(rev[0] == doctest::Approx(fwd[0]).epsilon(1e-14));
}

TEST_CASE("losses") {
  const std::vector<int> one = {1};
  const std::vector<double> half = {0.5};
  CHECK(binary_cross_entropy<double>(half, one) == doctest::Approx(std::log(2.0)));
  const T2 uniform({2, 6}, 1.0 / 6.0);
  const std::vector<int> targets = {0, 4};
  CHECK(categorical_cross_entropy(uniform, targets) == doctest::Approx(std::log(6.0)));

  const std::vector<double> p = {0.3};
  const std::vector<double> w = {1.0, 2.0};
  CHECK(binary_cross_entropy<double>(p, one, w) == 2.0 * binary_cross_entropy<double>(p, one));
  const std::vector<double> w6 = {1, 1, 1, 1, 2, 1};
  const std::vector<int> t4 = {4};
  const T2 row({1, 6}, 1.0 / 6.0);
  CHECK(categorical_cross_entropy(row, t4, w6) == 2.0 * categorical_cross_entropy(row, t4));

  const std::vector<double> bad = {1.5};
  CHECK_THROWS_AS(binary_cross_entropy<double>(bad, one), DomainError);
  const std::vector<double> zero = {0.0};
  CHECK_THROWS_AS(binary_cross_entropy<double>(zero, one), DomainError);
  CHECK_THROWS_AS(categorical_cross_entropy(T2({1, 6}, 0.5), t4), DomainError);
}

TEST_CASE("softmax and sigmoid") {
  const auto s = softmax_rows(T2({1, 3}, {1000.0, 1000.0, 1000.0}));
  for (double v : s.data) CHECK(v == doctest::Approx(1.0 / 3.0));
  CHECK(sigmoid(-1000.0) >= 0.0);
  CHECK(sigmoid(0.0) == 0.5);
}

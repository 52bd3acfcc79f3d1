#include <cmath>
#include <random>

#include "doctest.h"
#include "exist/errors.hpp"
#include "exist/eval.hpp"
#include "metrics_oracle.hpp"
#include "synthetic.hpp"

using namespace exist;

namespace {

ConfusionMatrix from_counts(std::vector<std::vector<std::uint64_t>> rows) {
  ConfusionMatrix cm(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) cm.at(i, j) = rows[i][j];
  }
  return cm;
}

}  // namespace

TEST_CASE("confusion matrix") {
  const std::vector<int> t = {1, 0}, p = {1, 0};
  const auto cm = confusion_matrix(t, p, Task::task1);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(1, 1) == 1);
  CHECK(cm.at(0, 1) == 0);
  CHECK(cm.normalized() == std::vector<std::vector<double>>{{1, 0}, {0, 1}});
  const std::vector<int> shorter = {1};
  CHECK_THROWS_AS(confusion_matrix(t, shorter, Task::task1), SizeError);
  const std::vector<int> out_of_range = {0, 7};
  CHECK_THROWS_AS(confusion_matrix(t, out_of_range, Task::task1), LabelError);

  const auto unsupported = from_counts({{3, 1}, {0, 0}}).normalized();
  CHECK(unsupported[1] == std::vector<double>{0, 0});
  CHECK(unsupported[0][0] + unsupported[0][1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("matrix text rendering round-trips the reference shape") {
  const std::vector<std::vector<double>> fig = {{0.69, 0.31}, {0.15, 0.85}};
  const auto text = format_matrix(fig);
  CHECK(text == "0.69 0.31\n0.15 0.85\n");
  CHECK(parse_matrix(text) == fig);
  CHECK(format_matrix(parse_matrix(text)) == text);
  CHECK_THROWS_AS(parse_matrix("0.1 x\n"), FormatError);
}

TEST_CASE("metrics from hand-counted matrices") {
  const auto m = metrics(from_counts({{50, 10}, {5, 35}}));
  CHECK(m.accuracy == doctest::Approx(0.85));
  const auto s = class_scores(from_counts({{50, 10}, {5, 35}}));
  CHECK(s[0].f1 == doctest::Approx(0.8696).epsilon(1e-4));
  CHECK(s[1].f1 == doctest::Approx(0.8235).epsilon(1e-4));
  CHECK(m.macro_f1 == doctest::Approx(0.8466).epsilon(1e-4));

  const auto id = metrics(from_counts({{4, 0, 0}, {0, 2, 0}, {0, 0, 9}}));
  CHECK(id.accuracy == 1.0);
  CHECK(id.macro_precision == 1.0);
  CHECK(id.macro_recall == 1.0);
  CHECK(id.macro_f1 == 1.0);

  const auto all_sexist = metrics(from_counts({{475, 0}, {0, 525}}));
  CHECK(all_sexist.accuracy == 1.0);
  const auto column = metrics(from_counts({{0, 475}, {0, 525}}));
  CHECK(column.accuracy == doctest::Approx(0.525));
  CHECK(column.macro_f1 == doctest::Approx(0.344).epsilon(1e-3));
  CHECK(column.macro_recall == 0.5);
  CHECK(column.micro_precision == doctest::Approx(0.525));
}

TEST_CASE("majority baseline") {
  const auto d = testing::table1_test_distribution();
  const auto t1 = majority_baseline(d, Task::task1);
  CHECK(std::abs(t1.accuracy - 0.525) <= 0.001);
  CHECK(std::abs(t1.macro_f1 - 0.344) <= 0.001);
  CHECK(std::abs(t1.macro_recall - 0.500) <= 0.001);
  const auto t2 = majority_baseline(d, Task::task2);
  CHECK(std::abs(t2.accuracy - 0.476) <= 0.001);
  CHECK(std::abs(t2.macro_f1 - 0.107) <= 0.001);
  CHECK(std::abs(t2.macro_recall - 0.167) <= 0.001);

  Dataset single;
  for (int i = 0; i < 5; ++i) {
    single.examples.push_back(testing::make_example(std::to_string(i), Task2Label::objectification, "x"));
  }
  CHECK(majority_baseline(single, Task::task2).accuracy == 1.0);
  // Taking the majority label from another set.
  Dataset ref;
  for (int i = 0; i < 3; ++i) ref.examples.push_back(testing::make_example(std::to_string(i), Task2Label::non_sexist, "x"));
  CHECK(majority_baseline(single, Task::task1, &ref).accuracy == 0.0);
}

TEST_CASE("averaging runs") {
  Metrics a, b;
  a.accuracy = 0.75;
  b.accuracy = 0.77;
  CHECK(average_runs(std::vector<Metrics>{a, b}).accuracy == doctest::Approx(0.76));
  CHECK(average_runs(std::vector<Metrics>{a, a, a}) == a);
  std::vector<Metrics> five(5);
  const double accs[] = {0.74, 0.75, 0.76, 0.77, 0.78};
  for (int i = 0; i < 5; ++i) five[i].accuracy = accs[i];
  CHECK(average_runs(five).accuracy == doctest::Approx(0.76));
  CHECK_THROWS_AS(average_runs(std::vector<Metrics>{}), SizeError);
}

TEST_CASE("randomized agreement with a naive recount") {
  std::mt19937_64 gen(123);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = trial % 2 ? 6 : 2;
    const std::size_t n = 1 + gen() % 60;
    std::vector<int> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<int>(gen() % k);
      p[i] = static_cast<int>(gen() % k);
    }
    const auto m = metrics(confusion_matrix(t, p, static_cast<std::size_t>(k)));
    const auto o = testing::naive_metrics(t, p, k);
    CHECK(std::abs(m.accuracy - o.accuracy) <= 1e-12);
    CHECK(std::abs(m.macro_precision - o.macro_precision) <= 1e-12);
    CHECK(std::abs(m.macro_recall - o.macro_recall) <= 1e-12);
    CHECK(std::abs(m.macro_f1 - o.macro_f1) <= 1e-12);

    // Joint permutation and count scaling leave the metrics unchanged.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), gen);
    std::vector<int> t2, p2;
    for (int rep = 0; rep < 3; ++rep) {
      for (auto i : idx) {
        t2.push_back(t[i]);
        p2.push_back(p[i]);
      }
    }
    const auto m2 = metrics(confusion_matrix(t2, p2, static_cast<std::size_t>(k)));
    CHECK(std::abs(m2.macro_f1 - m.macro_f1) <= 1e-12);
    CHECK(std::abs(m2.accuracy - m.accuracy) <= 1e-12);
  }
}

TEST_CASE("JSON report") {
  const auto cm = from_counts({{50, 10}, {5, 35}});
  const auto j = metrics_report(metrics(cm), cm);
  CHECK(j.at("accuracy").get<double>() == doctest::Approx(0.85));
  CHECK(j.contains("micro_precision"));
  CHECK(j.at("confusion").dump().find("50") != std::string::npos);
}

#include "doctest.h"
#include "exist/analysis.hpp"
#include "exist/errors.hpp"
#include "synthetic.hpp"

using namespace exist;
using testing::make_example;

TEST_CASE("term filters on normalized tokens") {
  const auto filters = builtin_filters();
  REQUIRE(filters.size() == 3);
  const auto& fem = filters[0];
  const auto& prefix = filters[1];
  const auto& prof = filters[2];
  CHECK(fem.matches(preprocess_tokens("The WOMAN said")));
  CHECK_FALSE(fem.matches(preprocess_tokens("womanhood")));
  CHECK(prefix.matches(preprocess_tokens("#Feminism rocks")));
  CHECK(prefix.matches(preprocess_tokens("feminists")));
  CHECK(prof.matches(preprocess_tokens("B*tch please")));
  CHECK(prof.matches(preprocess_tokens("what a slut")));
  CHECK_FALSE(prof.matches(preprocess_tokens("cocktail")));
  CHECK_THROWS_AS(TermFilter::any_of("none", {}), ConfigError);
}

TEST_CASE("filtered confusion") {
  Dataset d;
  d.examples = {make_example("1", Task2Label::non_sexist, "women can vote"),
                make_example("2", Task2Label::objectification, "that girl"),
                make_example("3", Task2Label::non_sexist, "nice weather")};
  const std::vector<int> preds = {1, 1, 0};
  const auto f = filtered_confusion(d, preds, Task::task1, builtin_filters()[0]);
  CHECK(f.count == 2);
  CHECK(f.confusion.at(0, 1) == 1);
  CHECK(f.confusion.at(1, 1) == 1);

  const auto none = filtered_confusion(d, preds, Task::task1, TermFilter::any_of("x", {"zebra"}));
  CHECK(none.count == 0);
  CHECK(none.confusion == ConfusionMatrix(2));

  TermFilter always;
  always.name = "always";
  always.kind = TermFilter::Kind::prefix;
  always.prefix = "";
  const auto everything = filtered_confusion(d, preds, Task::task1, always);
  CHECK(everything.confusion == confusion_matrix(d.labels(Task::task1), preds, Task::task1));
}

TEST_CASE("misclassification breakdown") {
  Dataset d;
  d.examples = {make_example("1", Task2Label::ideological_inequality, "a"),
                make_example("2", Task2Label::ideological_inequality, "b"),
                make_example("3", Task2Label::ideological_inequality, "c"),
                make_example("4", Task2Label::sexual_violence, "d"),
                make_example("5", Task2Label::objectification, "e"),
                make_example("6", Task2Label::non_sexist, "f")};
  const std::vector<int> preds = {0, 0, 0, 0, 2, 0};
  const auto b = misclassification_breakdown(d, preds);
  REQUIRE(b.size() == 2);
  CHECK(b[0].first == "ideological-inequality");
  CHECK(b[0].second == doctest::Approx(75.0));
  CHECK(b[1].first == "sexual-violence");
  CHECK(b[1].second == doctest::Approx(25.0));
  const std::vector<int> perfect = {1, 1, 1, 3, 2, 0};
  CHECK(misclassification_breakdown(d, perfect).empty());
}

TEST_CASE("length buckets") {
  Dataset d;
  d.examples = {make_example("1", Task2Label::non_sexist, std::string(50, 'a')),
                make_example("2", Task2Label::non_sexist, std::string(50, 'b'))};
  const std::vector<int> ok1 = {0, 0}, ok2 = {0, 0};
  auto r = length_bucket_report(d, ok1, ok2);
  REQUIRE(r.size() == 5);
  CHECK(r[0].count == 2);
  CHECK(*r[0].task1_correct == 1.0);
  CHECK_FALSE(r[1].task1_correct.has_value());

  d.examples = {make_example("1", Task2Label::non_sexist, std::string(100, 'a')),
                make_example("2", Task2Label::non_sexist, std::string(101, 'a')),
                make_example("3", Task2Label::non_sexist, std::string(1001, 'a')),
                make_example("4", Task2Label::non_sexist, "\xc3\xa9" + std::string(99, 'a'))};
  r = length_bucket_report(d);
  CHECK(r[0].count == 2);
  CHECK(r[1].count == 1);
  CHECK(r[4].count == 1);
  CHECK(r[4].label() == "1001+");
  CHECK(r[0].label() == "0-100");
  std::size_t total = 0;
  for (const auto& b : r) total += b.count;
  CHECK(total == d.size());
  CHECK(char_length("\xe2\x80\x9chi\xe2\x80\x9d") == 4);
}

TEST_CASE("per-source accuracy") {
  Dataset d;
  d.examples = {make_example("1", Task2Label::non_sexist, "a", Source::twitter),
                make_example("2", Task2Label::non_sexist, "b", Source::twitter),
                make_example("3", Task2Label::non_sexist, "c", Source::gab),
                make_example("4", Task2Label::non_sexist, "d", Source::gab)};
  const std::vector<int> preds = {0, 1, 0, 0};
  const auto r = source_split_report(d, preds, Task::task1);
  REQUIRE(r.size() == 2);
  CHECK(r[0].source == Source::twitter);
  CHECK(r[0].accuracy == 0.5);
  CHECK(r[1].accuracy == 1.0);

  d.examples.resize(2);
  const std::vector<int> two = {0, 0};
  CHECK(source_split_report(d, two, Task::task1).size() == 1);
}

TEST_CASE("full report renders") {
  const auto d = testing::separable_corpus(30, 4);
  std::vector<int> p1, p2;
  for (const auto& e : d.examples) {
    p1.push_back(0);
    p2.push_back(e.label(Task::task2) == 1 ? 1 : 0);
  }
  const auto report = analyze(d, p1, p2);
  CHECK(report.filters.size() == 3);
  const auto j = to_json(report);
  CHECK(j.at("length_buckets").size() == 5);
  CHECK(j.at("misclassified_as_non_sexist").size() == 4);
  const auto text = to_text(report);
  CHECK(text.find("Length buckets") != std::string::npos);
  CHECK(text.find("feminine") != std::string::npos);
  CHECK_THROWS_AS(analyze(d, std::vector<int>{0}, {}), SizeError);
}

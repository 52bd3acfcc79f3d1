#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "exist/corpus.hpp"
#include "exist/eval.hpp"
#include "exist/preprocess.hpp"

namespace exist {

/// Selects examples by their normalized tokens.
struct TermFilter {
  enum class Kind { any_of, prefix };

  std::string name;
  Kind kind = Kind::any_of;
  std::vector<std::string> words;  // any_of: whole-token matches
  std::string prefix;              // prefix: any token starting with it

  static TermFilter any_of(std::string name, std::vector<std::string> words);
  static TermFilter starts_with(std::string name, std::string prefix);

  bool matches(std::span<const std::string> tokens) const;
};

/// Feminine terms, the `feminis` prefix, and profanities (censored and plain spellings).
std::vector<TermFilter> builtin_filters();

struct FilteredConfusion {
  std::string name;
  ConfusionMatrix confusion;
  std::size_t count = 0;
};

/// Confusion over the examples whose normalized text matches `filter`.
FilteredConfusion filtered_confusion(const Dataset& d, std::span<const int> preds, Task task, const TermFilter& filter,
                                     const PreprocessConfig& pre = {});

/// Among sexist examples predicted non-sexist, percentage per true category,
/// in label order. Categories with no such example are left out.
std::vector<std::pair<std::string, double>> misclassification_breakdown(const Dataset& d,
                                                                        std::span<const int> preds_task2);

struct LengthBucket {
  std::size_t lo = 0;
  std::optional<std::size_t> hi;  // inclusive; open-ended when absent
  std::size_t count = 0;
  std::optional<double> task1_correct;  // fraction; absent when empty or no predictions
  std::optional<double> task2_correct;

  std::string label() const;
};

/// Buckets by raw character (code point) length: 0-100, 101-250, 251-500, 501-1000, 1001+.
std::vector<LengthBucket> length_bucket_report(const Dataset& d, std::span<const int> preds_task1 = {},
                                               std::span<const int> preds_task2 = {});

/// Number of UTF-8 code points.
std::size_t char_length(std::string_view text);

struct SourceAccuracy {
  Source source = Source::twitter;
  std::size_t count = 0;
  double accuracy = 0.0;
};

/// Accuracy per source; sources with no examples are omitted.
std::vector<SourceAccuracy> source_split_report(const Dataset& d, std::span<const int> preds, Task task);

struct AnalysisReport {
  std::vector<FilteredConfusion> filters;  // task1 predictions
  std::vector<LengthBucket> length_buckets;
  std::vector<SourceAccuracy> sources_task1;
  std::vector<SourceAccuracy> sources_task2;
  std::vector<std::pair<std::string, double>> misclassified_as_non_sexist;
};

/// Any prediction span may be empty; the matching sections are then left empty.
AnalysisReport analyze(const Dataset& d, std::span<const int> preds_task1, std::span<const int> preds_task2);

nlohmann::json to_json(const AnalysisReport& r);
std::string to_text(const AnalysisReport& r);

}  // namespace exist

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "exist/corpus.hpp"

namespace exist {

/// K x K counts; rows are true labels, columns predicted labels.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t k = 0) : k_(k), counts_(k * k, 0) {}

  std::size_t classes() const { return k_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * k_ + pred]; }
  std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * k_ + pred]; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t column_sum(std::size_t pred) const;

  /// Each row divided by its sum; rows without support stay all-zero.
  std::vector<std::vector<double>> normalized() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

struct Metrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double micro_precision = 0.0;  // equals accuracy for single-label prediction

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Throws SizeError when the sequences differ in length or are empty.
ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> preds, std::size_t k);
ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> preds, Task task);

/// Per-class scores; zero whenever a denominator is zero.
std::vector<ClassScores> class_scores(const ConfusionMatrix& cm);

/// Accuracy plus macro (unweighted over all K classes) precision, recall and F1.
Metrics metrics(const ConfusionMatrix& cm);

/// Predicts the modal label of `reference` (the evaluated set when null) for every example.
Metrics majority_baseline(const Dataset& test, Task task, const Dataset* reference = nullptr);

/// Field-wise arithmetic mean. Throws SizeError on an empty sequence.
Metrics average_runs(std::span<const Metrics> runs);

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const ConfusionMatrix& cm);
/// {accuracy, macro_precision, macro_recall, macro_f1, micro_precision, confusion}.
nlohmann::json metrics_report(const Metrics& m, const ConfusionMatrix& cm);

/// Whitespace-separated rows with fixed decimals, one line per row.
std::string format_matrix(const std::vector<std::vector<double>>& rows, int decimals = 2);
std::vector<std::vector<double>> parse_matrix(std::string_view text);

}  // namespace exist

#include "exist/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "exist/errors.hpp"

namespace exist {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < k_; ++j) s += at(truth, j);
  return s;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t pred) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += at(i, pred);
  return s;
}

std::vector<std::vector<double>> ConfusionMatrix::normalized() const {
  std::vector<std::vector<double>> rows(k_, std::vector<double>(k_, 0.0));
  for (std::size_t i = 0; i < k_; ++i) {
    const auto n = row_sum(i);
    if (n == 0) continue;
    for (std::size_t j = 0; j < k_; ++j) rows[i][j] = static_cast<double>(at(i, j)) / static_cast<double>(n);
  }
  return rows;
}

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> preds, std::size_t k) {
  if (truth.size() != preds.size()) {
    throw SizeError("confusion_matrix: " + std::to_string(truth.size()) + " labels vs " +
                    std::to_string(preds.size()) + " predictions");
  }
  if (truth.empty()) throw SizeError("confusion_matrix of nothing");
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || preds[i] < 0 || static_cast<std::size_t>(truth[i]) >= k ||
        static_cast<std::size_t>(preds[i]) >= k) {
      throw LabelError("label index outside [0, " + std::to_string(k) + ")");
    }
    ++cm.at(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(preds[i]));
  }
  return cm;
}

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> preds, Task task) {
  return confusion_matrix(truth, preds, LabelSpace::of(task).size());
}

std::vector<ClassScores> class_scores(const ConfusionMatrix& cm) {
  std::vector<ClassScores> out(cm.classes());
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    const double predicted = static_cast<double>(cm.column_sum(c));
    const double actual = static_cast<double>(cm.row_sum(c));
    auto& s = out[c];
    s.precision = predicted > 0 ? tp / predicted : 0.0;
    s.recall = actual > 0 ? tp / actual : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  }
  return out;
}

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  const auto total = cm.total();
  if (cm.classes() == 0 || total == 0) return m;
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) trace += cm.at(c, c);
  m.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  m.micro_precision = m.accuracy;
  for (const auto& s : class_scores(cm)) {
    m.macro_precision += s.precision;
    m.macro_recall += s.recall;
    m.macro_f1 += s.f1;
  }
  const double k = static_cast<double>(cm.classes());
  m.macro_precision /= k;
  m.macro_recall /= k;
  m.macro_f1 /= k;
  return m;
}

Metrics majority_baseline(const Dataset& test, Task task, const Dataset* reference) {
  const Dataset& ref = reference ? *reference : test;
  if (test.empty() || ref.empty()) throw SizeError("majority_baseline of an empty dataset");
  const std::size_t k = LabelSpace::of(task).size();
  std::vector<std::size_t> counts(k, 0);
  for (const auto& e : ref.examples) ++counts[static_cast<std::size_t>(e.label(task))];
  const int mode = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  const auto truth = test.labels(task);
  const std::vector<int> preds(truth.size(), mode);
  return metrics(confusion_matrix(truth, preds, k));
}

Metrics average_runs(std::span<const Metrics> runs) {
  if (runs.empty()) throw SizeError("average_runs of no runs");
  Metrics avg;
  for (const auto& r : runs) {
    avg.accuracy += r.accuracy;
    avg.macro_precision += r.macro_precision;
    avg.macro_recall += r.macro_recall;
    avg.macro_f1 += r.macro_f1;
    avg.micro_precision += r.micro_precision;
  }
  const double n = static_cast<double>(runs.size());
  avg.accuracy /= n;
  avg.macro_precision /= n;
  avg.macro_recall /= n;
  avg.macro_f1 /= n;
  avg.micro_precision /= n;
  return avg;
}

nlohmann::json to_json(const Metrics& m) {
  return {{"accuracy", m.accuracy},
          {"macro_precision", m.macro_precision},
          {"macro_recall", m.macro_recall},
          {"macro_f1", m.macro_f1},
          {"micro_precision", m.micro_precision}};
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t j = 0; j < cm.classes(); ++j) row.push_back(cm.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json metrics_report(const Metrics& m, const ConfusionMatrix& cm) {
  auto j = to_json(m);
  j["confusion"] = to_json(cm);
  return j;
}

std::string format_matrix(const std::vector<std::vector<double>>& rows, int decimals) {
  std::string out;
  char buf[64];
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.*f", decimals, row[j]);
      if (j) out.push_back(' ');
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

std::vector<std::vector<double>> parse_matrix(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v = 0;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) throw FormatError("matrix line is not numeric: " + line);
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) throw FormatError("ragged matrix rows");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace exist

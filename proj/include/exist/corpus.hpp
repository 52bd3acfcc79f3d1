#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace exist {

enum class Source : std::uint8_t { twitter, gab };
enum class Task : std::uint8_t { task1, task2 };

// Label values double as indices into the canonical LabelSpace order.
enum class Task1Label : std::uint8_t { non_sexist = 0, sexist = 1 };
enum class Task2Label : std::uint8_t {
  non_sexist = 0,
  ideological_inequality = 1,
  objectification = 2,
  sexual_violence = 3,
  stereotyping_dominance = 4,
  misogyny_non_sexual_violence = 5,
};

struct Example {
  std::string id;
  Source source = Source::twitter;
  std::string text;
  Task1Label task1 = Task1Label::non_sexist;
  Task2Label task2 = Task2Label::non_sexist;

  /// Label index under the given task.
  int label(Task task) const {
    return task == Task::task1 ? static_cast<int>(task1) : static_cast<int>(task2);
  }

  friend bool operator==(const Example&, const Example&) = default;
};

/// Fixed, ordered label names of one task. Index 0 is always non-sexist.
class LabelSpace {
 public:
  static const LabelSpace& of(Task task);

  Task task() const { return task_; }
  std::size_t size() const { return labels_.size(); }
  const std::string& name(std::size_t index) const { return labels_.at(index); }
  std::span<const std::string> labels() const { return labels_; }

  /// Case-insensitive lookup; '_' is accepted for '-'. Throws LabelError.
  int index_of(std::string_view name) const;

 private:
  LabelSpace(Task task, std::vector<std::string> labels) : task_(task), labels_(std::move(labels)) {}

  Task task_;
  std::vector<std::string> labels_;
};

std::string_view source_name(Source source);
Source parse_source(std::string_view name);

struct Dataset {
  std::vector<Example> examples;
  std::string provenance;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }

  /// Labels of every example under a task, in dataset order.
  std::vector<int> labels(Task task) const;

  // Provenance is metadata; equality is over the examples only.
  friend bool operator==(const Dataset& a, const Dataset& b) { return a.examples == b.examples; }
};

/// Parses the EXIST-style TSV layout. Columns are located by header name, so
/// extra columns (e.g. `test_case`) are ignored. Non-English rows are skipped.
Dataset parse_dataset(std::istream& in, std::string provenance = {});
Dataset load_dataset(const std::filesystem::path& path);

/// Writes the canonical layout: id, source, language, text, task1, task2.
void write_dataset(std::ostream& out, const Dataset& d);
void save_dataset(const std::filesystem::path& path, const Dataset& d);

/// First floor(0.8 N) examples for training, the rest for validation, unshuffled.
std::pair<Dataset, Dataset> split_train_val(const Dataset& d);

/// Fraction of examples per label; every label of the task is present.
std::map<std::string, double> class_distribution(const Dataset& d, Task task);

}  // namespace exist

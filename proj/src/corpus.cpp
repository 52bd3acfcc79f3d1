#include "exist/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "exist/errors.hpp"

namespace exist {
namespace {

std::string canonical_label(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(c == '_' ? '-' : c);
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

const LabelSpace& LabelSpace::of(Task task) {
  static const LabelSpace task1(Task::task1, {"non-sexist", "sexist"});
  static const LabelSpace task2(Task::task2,
                                {"non-sexist", "ideological-inequality", "objectification",
                                 "sexual-violence", "stereotyping-dominance",
                                 "misogyny-non-sexual-violence"});
  return task == Task::task1 ? task1 : task2;
}

int LabelSpace::index_of(std::string_view name) const {
  const auto key = canonical_label(name);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == key) return static_cast<int>(i);
  }
  throw LabelError("unknown " + std::string(task_ == Task::task1 ? "task1" : "task2") +
                   " label '" + std::string(name) + "'");
}

std::string_view source_name(Source source) { return source == Source::twitter ? "twitter" : "gab"; }

Source parse_source(std::string_view name) {
  const auto key = canonical_label(name);
  if (key == "twitter") return Source::twitter;
  if (key == "gab") return Source::gab;
  throw LabelError("unknown source '" + std::string(name) + "'");
}

std::vector<int> Dataset::labels(Task task) const {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.label(task));
  return out;
}

Dataset parse_dataset(std::istream& in, std::string provenance) {
  Dataset d;
  d.provenance = std::move(provenance);

  std::string line;
  if (!std::getline(in, line)) return d;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  constexpr std::string_view required[] = {"id", "source", "language", "text", "task1", "task2"};
  std::size_t col[6];
  {
    const auto header = split_tabs(line);
    for (std::size_t r = 0; r < 6; ++r) {
      const auto it = std::find(header.begin(), header.end(), required[r]);
      if (it == header.end()) {
        throw FormatError(d.provenance + ": header is missing column '" + std::string(required[r]) + "'");
      }
      col[r] = static_cast<std::size_t>(it - header.begin());
    }
  }
  const std::size_t needed = *std::max_element(std::begin(col), std::end(col)) + 1;

  const auto& space1 = LabelSpace::of(Task::task1);
  const auto& space2 = LabelSpace::of(Task::task2);
  std::unordered_set<std::string> seen;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() < needed) {
      throw FormatError(d.provenance + ": row " + std::to_string(row) + " has " +
                        std::to_string(f.size()) + " columns, expected at least " + std::to_string(needed));
    }
    if (canonical_label(f[col[2]]) != "en") continue;

    Example e;
    e.id = std::string(f[col[0]]);
    if (e.id.empty()) throw FormatError(d.provenance + ": row " + std::to_string(row) + " has an empty id");
    e.source = parse_source(f[col[1]]);
    e.text = std::string(f[col[3]]);
    e.task1 = static_cast<Task1Label>(space1.index_of(f[col[4]]));
    e.task2 = static_cast<Task2Label>(space2.index_of(f[col[5]]));
    if ((e.task1 == Task1Label::non_sexist) != (e.task2 == Task2Label::non_sexist)) {
      throw LabelError(d.provenance + ": row " + std::to_string(row) + " has inconsistent task1/task2 labels");
    }
    if (!seen.insert(e.id).second) {
      throw DuplicateError(d.provenance + ": duplicate id '" + e.id + "' at row " + std::to_string(row));
    }
    d.examples.push_back(std::move(e));
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return parse_dataset(in, path.string());
}

void write_dataset(std::ostream& out, const Dataset& d) {
  const auto& space1 = LabelSpace::of(Task::task1);
  const auto& space2 = LabelSpace::of(Task::task2);
  out << "id\tsource\tlanguage\ttext\ttask1\ttask2\n";
  for (const auto& e : d.examples) {
    out << e.id << '\t' << source_name(e.source) << "\ten\t" << e.text << '\t'
        << space1.name(static_cast<std::size_t>(e.task1)) << '\t'
        << space2.name(static_cast<std::size_t>(e.task2)) << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset " + path.string());
  write_dataset(out, d);
  if (!out) throw IoError("write failed for " + path.string());
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& d) {
  const std::size_t n = d.size();
  if (n < 2) throw SizeError("split_train_val needs at least 2 examples, got " + std::to_string(n));
  const std::size_t n_train = n * 4 / 5;
  Dataset train{{d.examples.begin(), d.examples.begin() + static_cast<std::ptrdiff_t>(n_train)},
                d.provenance + "[train]"};
  Dataset val{{d.examples.begin() + static_cast<std::ptrdiff_t>(n_train), d.examples.end()},
              d.provenance + "[val]"};
  return {std::move(train), std::move(val)};
}

std::map<std::string, double> class_distribution(const Dataset& d, Task task) {
  if (d.empty()) throw SizeError("class_distribution of an empty dataset");
  const auto& space = LabelSpace::of(task);
  std::vector<std::size_t> counts(space.size(), 0);
  for (const auto& e : d.examples) ++counts[static_cast<std::size_t>(e.label(task))];
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    out[space.name(i)] = static_cast<double>(counts[i]) / static_cast<double>(d.size());
  }
  return out;
}

}  // namespace exist

#include "exist/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "exist/errors.hpp"

namespace exist {

TermFilter TermFilter::any_of(std::string name, std::vector<std::string> words) {
  if (words.empty()) throw ConfigError("term filter '" + name + "' has no words");
  TermFilter f;
  f.name = std::move(name);
  f.kind = Kind::any_of;
  f.words = std::move(words);
  return f;
}

TermFilter TermFilter::starts_with(std::string name, std::string prefix) {
  if (prefix.empty()) throw ConfigError("term filter '" + name + "' has an empty prefix");
  TermFilter f;
  f.name = std::move(name);
  f.kind = Kind::prefix;
  f.prefix = std::move(prefix);
  return f;
}

bool TermFilter::matches(std::span<const std::string> tokens) const {
  for (const auto& t : tokens) {
    if (kind == Kind::prefix) {
      if (t.starts_with(prefix)) return true;
    } else if (std::find(words.begin(), words.end(), t) != words.end()) {
      return true;
    }
  }
  return false;
}

std::vector<TermFilter> builtin_filters() {
  // Normalization deletes '*', so censored spellings arrive as e.g. "btch".
  return {
      TermFilter::any_of("feminine", {"women", "woman", "girl", "lady", "female"}),
      TermFilter::starts_with("feminis", "feminis"),
      TermFilter::any_of("profanities", {"btch", "bitch", "whre", "whore", "sknk", "skank", "fck", "fuck", "slt",
                                         "slut", "cck", "cock", "cnt", "cunt"}),
  };
}

namespace {

void require_aligned(const Dataset& d, std::span<const int> preds) {
  if (preds.size() != d.size()) {
    throw SizeError("predictions (" + std::to_string(preds.size()) + ") not aligned with dataset (" +
                    std::to_string(d.size()) + ")");
  }
}

}  // namespace

FilteredConfusion filtered_confusion(const Dataset& d, std::span<const int> preds, Task task, const TermFilter& filter,
                                     const PreprocessConfig& pre) {
  require_aligned(d, preds);
  FilteredConfusion out{filter.name, ConfusionMatrix(LabelSpace::of(task).size()), 0};
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!filter.matches(preprocess_tokens(d.examples[i].text, pre))) continue;
    ++out.confusion.at(static_cast<std::size_t>(d.examples[i].label(task)), static_cast<std::size_t>(preds[i]));
    ++out.count;
  }
  return out;
}

std::vector<std::pair<std::string, double>> misclassification_breakdown(const Dataset& d,
                                                                        std::span<const int> preds_task2) {
  require_aligned(d, preds_task2);
  const auto& space = LabelSpace::of(Task::task2);
  std::vector<std::size_t> counts(space.size(), 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int truth = d.examples[i].label(Task::task2);
    if (truth != 0 && preds_task2[i] == 0) {
      ++counts[static_cast<std::size_t>(truth)];
      ++total;
    }
  }
  std::vector<std::pair<std::string, double>> out;
  if (total == 0) return out;
  for (std::size_t c = 1; c < space.size(); ++c) {
    if (counts[c] == 0) continue;
    out.emplace_back(space.name(c), 100.0 * static_cast<double>(counts[c]) / static_cast<double>(total));
  }
  return out;
}

std::string LengthBucket::label() const {
  return std::to_string(lo) + (hi ? "-" + std::to_string(*hi) : "+");
}

std::size_t char_length(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) n += (c & 0xc0) != 0x80 ? 1 : 0;
  return n;
}

std::vector<LengthBucket> length_bucket_report(const Dataset& d, std::span<const int> preds_task1,
                                               std::span<const int> preds_task2) {
  if (!preds_task1.empty()) require_aligned(d, preds_task1);
  if (!preds_task2.empty()) require_aligned(d, preds_task2);
  std::vector<LengthBucket> buckets(5);
  const std::pair<std::size_t, std::optional<std::size_t>> edges[] = {
      {0, 100}, {101, 250}, {251, 500}, {501, 1000}, {1001, std::nullopt}};
  for (std::size_t b = 0; b < 5; ++b) std::tie(buckets[b].lo, buckets[b].hi) = edges[b];
  std::vector<std::size_t> ok1(buckets.size(), 0), ok2(buckets.size(), 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto len = char_length(d.examples[i].text);
    std::size_t b = 0;
    while (buckets[b].hi && len > *buckets[b].hi) ++b;
    ++buckets[b].count;
    if (!preds_task1.empty() && preds_task1[i] == d.examples[i].label(Task::task1)) ++ok1[b];
    if (!preds_task2.empty() && preds_task2[i] == d.examples[i].label(Task::task2)) ++ok2[b];
  }
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    if (buckets[b].count == 0) continue;
    const double n = static_cast<double>(buckets[b].count);
    if (!preds_task1.empty()) buckets[b].task1_correct = static_cast<double>(ok1[b]) / n;
    if (!preds_task2.empty()) buckets[b].task2_correct = static_cast<double>(ok2[b]) / n;
  }
  return buckets;
}

std::vector<SourceAccuracy> source_split_report(const Dataset& d, std::span<const int> preds, Task task) {
  require_aligned(d, preds);
  std::vector<SourceAccuracy> out;
  for (Source s : {Source::twitter, Source::gab}) {
    SourceAccuracy row{s, 0, 0.0};
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.examples[i].source != s) continue;
      ++row.count;
      ok += preds[i] == d.examples[i].label(task) ? 1 : 0;
    }
    if (row.count == 0) continue;
    row.accuracy = static_cast<double>(ok) / static_cast<double>(row.count);
    out.push_back(row);
  }
  return out;
}

AnalysisReport analyze(const Dataset& d, std::span<const int> preds_task1, std::span<const int> preds_task2) {
  AnalysisReport r;
  if (!preds_task1.empty()) {
    for (const auto& f : builtin_filters()) r.filters.push_back(filtered_confusion(d, preds_task1, Task::task1, f));
    r.sources_task1 = source_split_report(d, preds_task1, Task::task1);
  }
  if (!preds_task2.empty()) {
    r.sources_task2 = source_split_report(d, preds_task2, Task::task2);
    r.misclassified_as_non_sexist = misclassification_breakdown(d, preds_task2);
  }
  r.length_buckets = length_bucket_report(d, preds_task1, preds_task2);
  return r;
}

nlohmann::json to_json(const AnalysisReport& r) {
  using nlohmann::json;
  json j;
  j["filters"] = json::array();
  for (const auto& f : r.filters) {
    j["filters"].push_back({{"name", f.name}, {"count", f.count}, {"confusion", to_json(f.confusion)},
                            {"normalized", f.confusion.normalized()}});
  }
  j["length_buckets"] = json::array();
  for (const auto& b : r.length_buckets) {
    json row{{"range", b.label()}, {"count", b.count}};
    row["task1_correct"] = b.task1_correct ? json(*b.task1_correct) : json(nullptr);
    row["task2_correct"] = b.task2_correct ? json(*b.task2_correct) : json(nullptr);
    j["length_buckets"].push_back(std::move(row));
  }
  auto sources = [](const std::vector<SourceAccuracy>& rows) {
    json a = json::array();
    for (const auto& s : rows) {
      a.push_back({{"source", std::string(source_name(s.source))}, {"count", s.count}, {"accuracy", s.accuracy}});
    }
    return a;
  };
  j["sources_task1"] = sources(r.sources_task1);
  j["sources_task2"] = sources(r.sources_task2);
  j["misclassified_as_non_sexist"] = json::object();
  for (const auto& [name, pct] : r.misclassified_as_non_sexist) j["misclassified_as_non_sexist"][name] = pct;
  return j;
}

std::string to_text(const AnalysisReport& r) {
  std::ostringstream os;
  char buf[160];
  if (!r.filters.empty()) {
    os << "Term-conditioned confusion (task 1, rows = true non-sexist / sexist)\n";
    for (const auto& f : r.filters) {
      const auto n = f.confusion.normalized();
      std::snprintf(buf, sizeof buf, "  %-12s n=%-6zu [%.2f %.2f] [%.2f %.2f]\n", f.name.c_str(), f.count, n[0][0],
                    n[0][1], n[1][0], n[1][1]);
      os << buf;
    }
  }
  os << "Length buckets (raw characters)\n";
  std::snprintf(buf, sizeof buf, "  %-10s %8s %10s %10s\n", "range", "count", "task1", "task2");
  os << buf;
  auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char b[32];
    std::snprintf(b, sizeof b, "%.1f%%", 100.0 * *v);
    return std::string(b);
  };
  for (const auto& b : r.length_buckets) {
    std::snprintf(buf, sizeof buf, "  %-10s %8zu %10s %10s\n", b.label().c_str(), b.count,
                  pct(b.task1_correct).c_str(), pct(b.task2_correct).c_str());
    os << buf;
  }
  auto sources = [&](const char* title, const std::vector<SourceAccuracy>& rows) {
    if (rows.empty()) return;
    os << title << '\n';
    for (const auto& s : rows) {
      std::snprintf(buf, sizeof buf, "  %-10s %8zu %9.1f%%\n", std::string(source_name(s.source)).c_str(), s.count,
                    100.0 * s.accuracy);
      os << buf;
    }
  };
  sources("Accuracy by source (task 1)", r.sources_task1);
  sources("Accuracy by source (task 2)", r.sources_task2);
  if (!r.misclassified_as_non_sexist.empty()) {
    os << "Sexist texts predicted non-sexist, by true category\n";
    for (const auto& [name, p] : r.misclassified_as_non_sexist) {
      std::snprintf(buf, sizeof buf, "  %-30s %6.1f%%\n", name.c_str(), p);
      os << buf;
    }
  }
  return os.str();
}

}  // namespace exist

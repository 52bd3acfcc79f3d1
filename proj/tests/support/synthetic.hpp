#pragma once

// Synthetic corpora shared by the unit and acceptance tests.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "exist/corpus.hpp"
#include "exist/rng.hpp"

namespace exist::testing {

inline Example make_example(std::string id, Task2Label label, std::string text, Source source = Source::twitter) {
  Example e;
  e.id = std::move(id);
  e.source = source;
  e.text = std::move(text);
  e.task2 = label;
  e.task1 = label == Task2Label::non_sexist ? Task1Label::non_sexist : Task1Label::sexist;
  return e;
}

/// 2208 texts: 1050 non-sexist, 1158 sexist split 328/153/197/262/218 over the
/// five categories; 1716 twitter, 492 gab.
inline Dataset table1_test_distribution() {
  const std::array<std::pair<Task2Label, int>, 6> counts = {{
      {Task2Label::non_sexist, 1050},
      {Task2Label::ideological_inequality, 328},
      {Task2Label::objectification, 153},
      {Task2Label::sexual_violence, 197},
      {Task2Label::stereotyping_dominance, 262},
      {Task2Label::misogyny_non_sexual_violence, 218},
  }};
  Dataset d;
  int n = 0;
  for (const auto& [label, count] : counts) {
    for (int i = 0; i < count; ++i, ++n) {
      d.examples.push_back(make_example("t" + std::to_string(n), label, "text number " + std::to_string(n),
                                        (n * 41) % 184 < 41 ? Source::gab : Source::twitter));
    }
  }
  return d;
}

/// Separable corpus: every text carries words specific to its task2 class,
/// mixed with shared filler. Classes cycle so every label is represented.
inline Dataset separable_corpus(std::size_t n, std::uint64_t seed, bool binary_only = false) {
  static const std::array<std::array<const char*, 4>, 6> cue = {{
      {"sunny", "garden", "coffee", "music"},
      {"equality", "wage", "rights", "career"},
      {"skirt", "body", "looks", "legs"},
      {"assault", "threat", "force", "attack"},
      {"kitchen", "driver", "nagging", "emotional"},
      {"hate", "useless", "stupid", "trash"},
  }};
  static const std::array<const char*, 10> filler = {"the", "a",   "and", "she", "they",
                                                     "was", "is", "so",  "today", "really"};
  Rng rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = binary_only ? (i % 2 == 0 ? 0 : 1 + (i / 2) % 5) : i % 6;
    const std::size_t len = 6 + rng.uniform_index(10);
    std::string text;
    for (std::size_t t = 0; t < len; ++t) {
      if (!text.empty()) text += ' ';
      text += rng.uniform_index(2) == 0 ? cue[cls][rng.uniform_index(4)] : filler[rng.uniform_index(filler.size())];
    }
    text += ' ';
    text += cue[cls][rng.uniform_index(4)];
    d.examples.push_back(make_example("s" + std::to_string(i), static_cast<Task2Label>(cls), text,
                                      i % 4 == 3 ? Source::gab : Source::twitter));
  }
  return d;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("exist_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace exist::testing

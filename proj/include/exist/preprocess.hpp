#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace exist {

struct PreprocessConfig {
  /// Characters deleted in the punctuation pass. Entries may be multi-byte
  /// UTF-8 sequences (curly quotes). Never contains the ASCII apostrophe.
  std::vector<std::string> punctuation_set = default_punctuation();
  std::string mention_token = "username";
  /// Treat the standalone token `URL` as a link placeholder.
  bool strip_url_literal = true;

  static std::vector<std::string> default_punctuation();
};

/// Tweet/gab normalization, applied in order: drop URLs, replace @-mentions,
/// split hyphens, split hashtags, delete punctuation, lowercase, collapse
/// whitespace. Stopwords are kept.
std::string normalize(std::string_view raw, const PreprocessConfig& cfg = {});

/// Splits normalized text on single spaces.
std::vector<std::string> tokenize(std::string_view normalized);

/// normalize + tokenize.
std::vector<std::string> preprocess_tokens(std::string_view raw, const PreprocessConfig& cfg = {});

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace exist

#include "exist/preprocess.hpp"

#include <algorithm>
#include <cctype>

namespace exist {
namespace {

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_';
}

bool is_ascii_space(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x20 || u == 0x7f || c == ' ';
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (s.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) return false;
  }
  return true;
}

// Links run from an http(s):// or www. prefix to the next whitespace.
std::string remove_urls(std::string_view s, bool strip_literal) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const bool at_token_start = i == 0 || is_ascii_space(s[i - 1]);
    std::size_t skip = 0;
    if (starts_with_ci(s, i, "http://") || starts_with_ci(s, i, "https://") || starts_with_ci(s, i, "www.")) {
      skip = 1;
    } else if (strip_literal && at_token_start && s.compare(i, 3, "URL") == 0 &&
               (i + 3 == s.size() || is_ascii_space(s[i + 3]))) {
      skip = 1;
    }
    if (skip) {
      while (i < s.size() && !is_ascii_space(s[i])) ++i;
      out.push_back(' ');
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

// `@name` not preceded by a word character (so e-mail addresses are left alone).
std::string replace_mentions(std::string_view s, std::string_view token) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '@' && i + 1 < s.size() && is_word_char(s[i + 1]) && (i == 0 || !is_word_char(s[i - 1]))) {
      ++i;
      while (i < s.size() && is_word_char(s[i])) ++i;
      out.append(token);
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

}  // namespace

std::vector<std::string> PreprocessConfig::default_punctuation() {
  std::vector<std::string> set;
  // All ASCII punctuation except the apostrophe; this covers the listed
  // marks plus @ # < > | " and the backtick.
  for (int c = 0x21; c < 0x7f; ++c) {
    if (std::ispunct(c) && c != '\'') set.emplace_back(1, static_cast<char>(c));
  }
  for (const char* q : {"‘", "’", "“", "”"}) set.emplace_back(q);
  return set;
}

std::string normalize(std::string_view raw, const PreprocessConfig& cfg) {
  std::string s = remove_urls(raw, cfg.strip_url_literal);
  s = replace_mentions(s, cfg.mention_token);
  std::replace(s.begin(), s.end(), '-', ' ');
  std::replace(s.begin(), s.end(), '#', ' ');

  std::string stripped;
  stripped.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    bool removed = false;
    for (const auto& p : cfg.punctuation_set) {
      if (!p.empty() && s.compare(i, p.size(), p) == 0) {
        i += p.size();
        removed = true;
        break;
      }
    }
    if (!removed) stripped.push_back(s[i++]);
  }

  std::string out;
  out.reserve(stripped.size());
  bool pending_space = false;
  for (char c : stripped) {
    if (is_ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start <= normalized.size()) {
    auto end = normalized.find(' ', start);
    if (end == std::string_view::npos) end = normalized.size();
    if (end > start) tokens.emplace_back(normalized.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

std::vector<std::string> preprocess_tokens(std::string_view raw, const PreprocessConfig& cfg) {
  return tokenize(normalize(raw, cfg));
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace exist

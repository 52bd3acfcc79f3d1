#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "exist/corpus.hpp"
#include "exist/rng.hpp"

namespace exist {

enum class EdaOp : std::uint8_t { synonym_replacement, random_insertion, random_swap };

struct EdaConfig {
  double rate = 0.05;
  std::size_t n_aug = 8;
  /// Applied in the fixed order SR, RI, RS regardless of listing order.
  std::vector<EdaOp> ops = {EdaOp::synonym_replacement, EdaOp::random_insertion, EdaOp::random_swap};
  std::uint64_t seed = 0;

  /// Throws ConfigError if rate is outside [0, 1].
  void validate() const;
};

/// Parses "sr,ri,rs" style lists. Deletion ("rd") is rejected.
std::vector<EdaOp> parse_eda_ops(const std::string& list);

/// word -> synonyms. A word never lists itself.
class Lexicon {
 public:
  Lexicon() = default;

  /// Self-references are dropped; words left without synonyms are not stored.
  void add(const std::string& word, std::vector<std::string> synonyms);

  const std::vector<std::string>* find(const std::string& word) const;
  bool contains(const std::string& word) const { return find(word) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Format: `word<TAB>syn1,syn2,...` per line.
  static Lexicon parse(std::istream& in);
  static Lexicon load(const std::filesystem::path& path);

 private:
  std::unordered_map<std::string, std::vector<std::string>> entries_;
};

/// max(1, floor(rate * length)).
std::size_t eda_op_count(double rate, std::size_t length);

std::vector<std::string> synonym_replacement(std::vector<std::string> tokens, std::size_t n,
                                             const Lexicon& lexicon, Rng& rng);
std::vector<std::string> random_insertion(std::vector<std::string> tokens, std::size_t n,
                                          const Lexicon& lexicon, Rng& rng);
std::vector<std::string> random_swap(std::vector<std::string> tokens, std::size_t n, Rng& rng);

/// Every original followed by its n_aug variants (`id#k`, same labels).
/// Texts must already be normalized. Deterministic in (d, cfg, lexicon).
Dataset augment_dataset(const Dataset& d, const EdaConfig& cfg, const Lexicon& lexicon);

}  // namespace exist

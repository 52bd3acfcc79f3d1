#include "exist/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "exist/errors.hpp"
#include "exist/preprocess.hpp"

namespace exist {
namespace {

std::vector<std::size_t> positions_with_entries(const std::vector<std::string>& tokens, const Lexicon& lex) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (lex.contains(tokens[i])) pos.push_back(i);
  }
  return pos;
}

const std::string& pick(const std::vector<std::string>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.uniform_index(v.size()))];
}

bool has_op(const std::vector<EdaOp>& ops, EdaOp op) {
  return std::find(ops.begin(), ops.end(), op) != ops.end();
}

}  // namespace

void EdaConfig::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("EDA rate must lie in [0, 1]");
}

std::vector<EdaOp> parse_eda_ops(const std::string& list) {
  std::vector<EdaOp> ops;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    for (auto& c : item) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (item == "sr") ops.push_back(EdaOp::synonym_replacement);
    else if (item == "ri") ops.push_back(EdaOp::random_insertion);
    else if (item == "rs") ops.push_back(EdaOp::random_swap);
    else if (item == "rd") throw ConfigError("random deletion is not supported");
    else if (!item.empty()) throw ConfigError("unknown EDA op '" + item + "'");
  }
  return ops;
}

void Lexicon::add(const std::string& word, std::vector<std::string> synonyms) {
  std::erase_if(synonyms, [&](const std::string& s) { return s.empty() || s == word; });
  if (synonyms.empty()) return;
  auto& slot = entries_[word];
  for (auto& s : synonyms) {
    if (std::find(slot.begin(), slot.end(), s) == slot.end()) slot.push_back(std::move(s));
  }
}

const std::vector<std::string>* Lexicon::find(const std::string& word) const {
  const auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

Lexicon Lexicon::parse(std::istream& in) {
  Lexicon lex;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("lexicon line " + std::to_string(row) + " has no tab");
    std::vector<std::string> syns;
    std::stringstream ss(line.substr(tab + 1));
    std::string s;
    while (std::getline(ss, s, ',')) syns.push_back(s);
    lex.add(line.substr(0, tab), std::move(syns));
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  return parse(in);
}

std::size_t eda_op_count(double rate, std::size_t length) {
  const auto n = static_cast<std::size_t>(std::floor(rate * static_cast<double>(length)));
  return std::max<std::size_t>(1, n);
}

std::vector<std::string> synonym_replacement(std::vector<std::string> tokens, std::size_t n,
                                             const Lexicon& lexicon, Rng& rng) {
  auto candidates = positions_with_entries(tokens, lexicon);
  if (n == 0 || candidates.empty()) return tokens;
  rng.shuffle(candidates);
  const std::size_t count = std::min(n, candidates.size());
  for (std::size_t k = 0; k < count; ++k) {
    auto& tok = tokens[candidates[k]];
    tok = pick(*lexicon.find(tok), rng);
  }
  return tokens;
}

std::vector<std::string> random_insertion(std::vector<std::string> tokens, std::size_t n,
                                          const Lexicon& lexicon, Rng& rng) {
  for (std::size_t k = 0; k < n; ++k) {
    const auto candidates = positions_with_entries(tokens, lexicon);
    if (candidates.empty()) break;
    const auto& word = tokens[candidates[static_cast<std::size_t>(rng.uniform_index(candidates.size()))]];
    std::string synonym = pick(*lexicon.find(word), rng);
    const auto at = static_cast<std::ptrdiff_t>(rng.uniform_index(tokens.size() + 1));
    tokens.insert(tokens.begin() + at, std::move(synonym));
  }
  return tokens;
}

std::vector<std::string> random_swap(std::vector<std::string> tokens, std::size_t n, Rng& rng) {
  if (tokens.size() < 2) return tokens;
  for (std::size_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(rng.uniform_index(tokens.size()));
    auto j = static_cast<std::size_t>(rng.uniform_index(tokens.size() - 1));
    if (j >= i) ++j;
    std::swap(tokens[i], tokens[j]);
  }
  return tokens;
}

Dataset augment_dataset(const Dataset& d, const EdaConfig& cfg, const Lexicon& lexicon) {
  cfg.validate();
  Dataset out;
  out.provenance = d.provenance + "[eda]";
  out.examples.reserve(d.size() * (1 + cfg.n_aug));
  const bool sr = has_op(cfg.ops, EdaOp::synonym_replacement);
  const bool ri = has_op(cfg.ops, EdaOp::random_insertion);
  const bool rs = has_op(cfg.ops, EdaOp::random_swap);

  for (const auto& original : d.examples) {
    out.examples.push_back(original);
    Rng rng(derive_seed(cfg.seed, original.id));
    const auto tokens = tokenize(original.text);
    const std::size_t n = eda_op_count(cfg.rate, tokens.size());
    for (std::size_t k = 1; k <= cfg.n_aug; ++k) {
      auto variant = tokens;
      if (sr) variant = synonym_replacement(std::move(variant), n, lexicon, rng);
      if (ri) variant = random_insertion(std::move(variant), n, lexicon, rng);
      if (rs) variant = random_swap(std::move(variant), n, rng);
      Example e = original;
      e.id = original.id + "#" + std::to_string(k);
      e.text = join_tokens(variant);
      out.examples.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace exist

#include "exist/embed.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "exist/binary_io.hpp"
#include "exist/errors.hpp"
#include "exist/rng.hpp"

namespace exist {

Vocab::Vocab() {
  add(kPadToken);
  add(kUnkToken);
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kUnkToken) {
    throw FormatError("vocab token list must start with <pad>, <unk>");
  }
  Vocab v;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw DuplicateError("duplicate vocab token '" + tokens[i] + "'");
    v.add(tokens[i]);
  }
  return v;
}

std::int32_t Vocab::add(const std::string& token) {
  const auto [it, inserted] = ids_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::int32_t Vocab::id_of(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64(std::string_view("\0", 1), h);
  }
  return h;
}

Vocab build_vocab(std::span<const std::vector<std::string>> corpus, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : corpus) {
    for (const auto& t : seq) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= min_count && tok != Vocab::kPadToken && tok != Vocab::kUnkToken) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (const auto& [tok, n] : kept) v.add(tok);
  return v;
}

std::vector<std::int32_t> encode(std::span<const std::string> tokens, const Vocab& vocab, std::size_t max_len) {
  std::vector<std::int32_t> ids(max_len, Vocab::kPad);
  const std::size_t n = std::min(tokens.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.id_of(tokens[i]);
  return ids;
}

EmbeddingMatrix parse_pretrained_table(std::istream& in, const Vocab& vocab) {
  EmbeddingMatrix m;
  m.rows = vocab.size();
  m.trainable = false;
  std::vector<bool> filled(vocab.size(), false);
  std::string line;
  std::size_t row = 0;
  std::vector<float> vec;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    vec.clear();
    std::string field;
    while (ls >> field) {
      float x = 0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw FormatError("embedding table line " + std::to_string(row) + ": bad number '" + field + "'");
      }
      vec.push_back(x);
    }
    if (m.dim == 0) {
      if (vec.empty()) throw FormatError("embedding table line " + std::to_string(row) + " has no vector");
      m.dim = vec.size();
      m.values.assign(m.rows * m.dim, 0.0f);
    } else if (vec.size() != m.dim) {
      throw FormatError("embedding table line " + std::to_string(row) + " has " + std::to_string(vec.size()) +
                        " values, expected " + std::to_string(m.dim));
    }
    if (!vocab.contains(word)) continue;
    const auto id = static_cast<std::size_t>(vocab.id_of(word));
    if (id == static_cast<std::size_t>(Vocab::kPad) || filled[id]) continue;
    filled[id] = true;
    std::copy(vec.begin(), vec.end(), m.values.begin() + static_cast<std::ptrdiff_t>(id * m.dim));
  }
  if (m.dim == 0) throw FormatError("embedding table is empty");
  return m;
}

EmbeddingMatrix load_pretrained_table(const std::filesystem::path& path, const Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding table " + path.string());
  return parse_pretrained_table(in, vocab);
}

void ContextualStore::add(std::string id, std::size_t length, std::vector<float> values) {
  if (length == 0) throw ShapeError("contextual record '" + id + "' has no tokens");
  if (values.size() != length * dim_) throw ShapeError("contextual record '" + id + "' has wrong payload size");
  if (index_.count(id)) throw DuplicateError("duplicate contextual record id '" + id + "'");
  index_.emplace(id, records_.size());
  records_.push_back({std::move(id), length, std::move(values)});
}

const ContextualStore::Record* ContextualStore::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

ContextualStore read_contextual(std::istream& in) {
  BinaryReader r(in);
  if (r.bytes(4) != "CEMB") throw FormatError("bad CEMB magic");
  const auto version = r.uint<std::uint32_t>();
  if (version != kCembVersion) throw FormatError("unsupported CEMB version " + std::to_string(version));
  const auto dim = r.uint<std::uint32_t>();
  const auto count = r.uint<std::uint64_t>();
  if (dim == 0 && count > 0) throw FormatError("CEMB dim is zero");
  ContextualStore store(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string id = r.short_string();
    const auto length = r.uint<std::uint32_t>();
    if (length == 0) throw FormatError("CEMB record '" + id + "' has no tokens");
    std::vector<float> values(static_cast<std::size_t>(length) * dim);
    r.f32s(values);
    store.add(std::move(id), length, std::move(values));
  }
  return store;
}

ContextualStore load_contextual(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open CEMB file " + path.string());
  return read_contextual(in);
}

void write_contextual(std::ostream& out, const ContextualStore& store) {
  BinaryWriter w(out);
  w.bytes("CEMB");
  w.uint<std::uint32_t>(kCembVersion);
  w.uint<std::uint32_t>(store.dim());
  w.uint<std::uint64_t>(store.size());
  for (const auto& rec : store.records()) {
    w.short_string(rec.id);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(rec.length));
    w.f32s(rec.values);
  }
  w.check();
}

void save_contextual(const std::filesystem::path& path, const ContextualStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write CEMB file " + path.string());
  write_contextual(out, store);
}

}  // namespace exist

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace exist {

/// Token -> id map. Ids are contiguous; 0 is PAD and 1 is UNK.
class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocab();

  /// Rebuilds a vocab from tokens in id order; the first two must be PAD/UNK.
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::int32_t add(const std::string& token);
  std::int32_t id_of(const std::string& token) const;
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  const std::string& token(std::int32_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// FNV-1a over the id-ordered token list.
  std::uint64_t hash() const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::unordered_map<std::string, std::int32_t> ids_;
  std::vector<std::string> tokens_;
};

/// Tokens with count >= min_count, ordered by (count desc, token asc), ids from 2.
Vocab build_vocab(std::span<const std::vector<std::string>> corpus, std::size_t min_count = 1);

/// Fixed-length id sequence: unknown -> UNK, tail-truncated, right-padded with PAD.
std::vector<std::int32_t> encode(std::span<const std::string> tokens, const Vocab& vocab, std::size_t max_len);

struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> values;  // rows x dim, row-major; row 0 (PAD) is zero
  bool trainable = true;

  std::span<const float> row(std::size_t r) const { return {values.data() + r * dim, dim}; }
};

/// Whitespace-separated `word v1 ... vD` text. Vocab words missing from the
/// file get zero rows. Throws FormatError on inconsistent arity.
EmbeddingMatrix parse_pretrained_table(std::istream& in, const Vocab& vocab);
EmbeddingMatrix load_pretrained_table(const std::filesystem::path& path, const Vocab& vocab);

/// Frozen per-token vectors keyed by example id, in file order.
class ContextualStore {
 public:
  struct Record {
    std::string id;
    std::size_t length = 0;     // token count L >= 1
    std::vector<float> values;  // L x dim, row-major

    friend bool operator==(const Record&, const Record&) = default;
  };

  explicit ContextualStore(std::uint32_t dim = 0) : dim_(dim) {}

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Throws DuplicateError on a repeated id and ShapeError on a bad payload.
  void add(std::string id, std::size_t length, std::vector<float> values);
  const Record* find(const std::string& id) const;
  const std::vector<Record>& records() const { return records_; }

  friend bool operator==(const ContextualStore& a, const ContextualStore& b) {
    return a.dim_ == b.dim_ && a.records_ == b.records_;
  }

 private:
  std::uint32_t dim_;
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

// CEMB v1, little-endian: "CEMB", u32 version, u32 dim, u64 count, then per
// record: u16 id length, id bytes, u32 token count, count*dim f32.
inline constexpr std::uint32_t kCembVersion = 1;

ContextualStore read_contextual(std::istream& in);
ContextualStore load_contextual(const std::filesystem::path& path);
void write_contextual(std::ostream& out, const ContextualStore& store);
void save_contextual(const std::filesystem::path& path, const ContextualStore& store);

}  // namespace exist

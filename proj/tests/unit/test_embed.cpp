#include <cstring>
#include <sstream>

#include "doctest.h"
#include "exist/embed.hpp"
#include "exist/errors.hpp"

using namespace exist;

namespace {

using Tokens = std::vector<std::string>;

// Hand-rolled little-endian CEMB writer, independent of the library's writer.
struct Bytes {
  std::string s;
  void u16(std::uint16_t v) { for (int i = 0; i < 2; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff); }
  void u32(std::uint32_t v) { for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff); }
  void u64(std::uint64_t v) { for (int i = 0; i < 8; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff); }
  void f32(float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    u32(v);
  }
  void str(const std::string& t) {
    u16(static_cast<std::uint16_t>(t.size()));
    s += t;
  }
};

ContextualStore read_bytes(const std::string& s) {
  std::istringstream in(s);
  return read_contextual(in);
}

}  // namespace

TEST_CASE("vocabulary construction") {
  const std::vector<Tokens> corpus = {{"a", "b"}, {"a"}};
  const auto v = build_vocab(corpus);
  CHECK(v.tokens() == Tokens{"<pad>", "<unk>", "a", "b"});
  CHECK(build_vocab(std::vector<Tokens>{}).size() == 2);
  CHECK(build_vocab(corpus, 2).tokens() == Tokens{"<pad>", "<unk>", "a"});
  const std::vector<Tokens> ties = {{"z", "y", "x"}};
  CHECK(build_vocab(ties).tokens() == Tokens{"<pad>", "<unk>", "x", "y", "z"});
  CHECK(Vocab::from_tokens(v.tokens()) == v);
  CHECK(Vocab::from_tokens(v.tokens()).hash() == v.hash());
  CHECK_THROWS(Vocab::from_tokens({"a", "b"}));
}

TEST_CASE("encoding pads, truncates and maps unknowns") {
  const std::vector<Tokens> corpus = {{"a", "b"}, {"a"}};
  const auto v = build_vocab(corpus);
  CHECK(encode(Tokens{"a", "b"}, v, 4) == std::vector<std::int32_t>{2, 3, 0, 0});
  CHECK(encode(Tokens{"z"}, v, 2) == std::vector<std::int32_t>{1, 0});
  CHECK(encode(Tokens{"a", "b", "a"}, v, 2) == std::vector<std::int32_t>{2, 3});
}

TEST_CASE("pretrained table") {
  Vocab v;
  v.add("a");
  v.add("missing");
  std::istringstream in("a 1.0 2.0\nzzz 3 4\n");
  const auto m = parse_pretrained_table(in, v);
  CHECK(m.rows == 4);
  CHECK(m.dim == 2);
  CHECK(m.row(2)[0] == 1.0f);
  CHECK(m.row(2)[1] == 2.0f);
  CHECK(m.row(3)[0] == 0.0f);
  CHECK(m.row(0)[0] == 0.0f);
  std::istringstream bad("a 1.0 2.0\nb 1.0\n");
  CHECK_THROWS_AS(parse_pretrained_table(bad, v), FormatError);
}

TEST_CASE("CEMB reading from hand-built bytes") {
  Bytes b;
  b.s = "CEMB";
  b.u32(1);
  b.u32(4);
  b.u64(1);
  b.str("ex1");
  b.u32(3);
  for (int i = 0; i < 12; ++i) b.f32(static_cast<float>(i) * 0.5f);
  const auto store = read_bytes(b.s);
  REQUIRE(store.size() == 1);
  CHECK(store.dim() == 4);
  const auto* r = store.find("ex1");
  REQUIRE(r != nullptr);
  CHECK(r->length == 3);
  CHECK(r->values[11] == 5.5f);

  std::ostringstream out;
  write_contextual(out, store);
  CHECK(out.str() == b.s);
}

TEST_CASE("CEMB errors") {
  Bytes empty;
  empty.s = "CEMB";
  empty.u32(1);
  empty.u32(768);
  empty.u64(0);
  CHECK(read_bytes(empty.s).empty());

  Bytes magic = empty;
  magic.s[0] = 'X';
  CHECK_THROWS_AS(read_bytes(magic.s), FormatError);

  Bytes version;
  version.s = "CEMB";
  version.u32(2);
  version.u32(4);
  version.u64(0);
  CHECK_THROWS_AS(read_bytes(version.s), FormatError);

  Bytes shortrec;
  shortrec.s = "CEMB";
  shortrec.u32(1);
  shortrec.u32(768);
  shortrec.u64(1);
  shortrec.str("a");
  shortrec.u32(1);
  for (int i = 0; i < 767; ++i) shortrec.f32(1.0f);
  CHECK_THROWS_AS(read_bytes(shortrec.s), IoError);

  Bytes dup;
  dup.s = "CEMB";
  dup.u32(1);
  dup.u32(1);
  dup.u64(2);
  for (int k = 0; k < 2; ++k) {
    dup.str("same");
    dup.u32(1);
    dup.f32(0.0f);
  }
  CHECK_THROWS_AS(read_bytes(dup.s), DuplicateError);

  CHECK_THROWS_AS(read_bytes("CEM"), IoError);
}

TEST_CASE("contextual store round trip") {
  ContextualStore s(3);
  s.add("x", 2, {1, 2, 3, 4, 5, 6});
  s.add("y", 1, {-1, 0, 1});
  CHECK_THROWS_AS(s.add("x", 1, {0, 0, 0}), DuplicateError);
  CHECK_THROWS_AS(s.add("z", 2, {0, 0, 0}), ShapeError);
  std::stringstream io;
  write_contextual(io, s);
  CHECK(read_contextual(io) == s);
}

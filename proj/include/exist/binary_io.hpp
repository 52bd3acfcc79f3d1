#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "exist/errors.hpp"

namespace exist {

// Little-endian primitives shared by the CEMB and checkpoint formats.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}

  void bytes(std::string_view s) { os_.write(s.data(), static_cast<std::streamsize>(s.size())); }

  template <typename U>
  void uint(U v) {
    char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os_.write(buf, sizeof(U));
  }

  void f32(float v) { uint<std::uint32_t>(std::bit_cast<std::uint32_t>(v)); }

  void f32s(std::span<const float> v) {
    for (float x : v) f32(x);
  }

  /// u16-length-prefixed string.
  void short_string(std::string_view s) {
    if (s.size() > 0xffff) throw FormatError("string too long for u16 length prefix");
    uint<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
    bytes(s);
  }

  void check() const {
    if (!os_) throw IoError("write failed");
  }

 private:
  std::ostream& os_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& is) : is_(is) {}

  std::string bytes(std::size_t n) {
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }

  template <typename U>
  U uint() {
    unsigned char buf[sizeof(U)];
    read(reinterpret_cast<char*>(buf), sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
    return v;
  }

  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }

  void f32s(std::span<float> out) {
    for (float& x : out) x = f32();
  }

  std::string short_string() { return bytes(uint<std::uint16_t>()); }

  /// True when no bytes remain.
  bool at_end() { return is_.peek() == std::char_traits<char>::eof(); }

 private:
  void read(char* dst, std::size_t n) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) throw IoError("unexpected end of binary payload");
  }

  std::istream& is_;
};

}  // namespace exist

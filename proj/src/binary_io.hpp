#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ocsi/error.hpp"
#include "ocsi/ids.hpp"

namespace ocsi::detail {

// Little-endian writer independent of host byte order.
class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  void bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }
  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v), 4); }

  // u16 length prefix, then the UTF-8 bytes.
  void id(const ItemId& id);
  void check() const;

 private:
  void put_le(std::uint64_t v, int n) {
    char buf[8];
    for (int i = 0; i < n; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(buf, n);
  }

  std::ostream& out_;
};

// Little-endian reader; running out of bytes raises FormatError(truncated).
class LeReader {
 public:
  LeReader(std::istream& in, std::string_view what) : in_(in), what_(what) {}

  std::string bytes(std::size_t n);
  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get_le(4))); }
  ItemId id();

  // Reads everything left in the stream.
  std::string rest();

 private:
  std::uint64_t get_le(int n);

  std::istream& in_;
  std::string what_;
};

std::vector<ItemId> read_id_table(LeReader& r, std::uint32_t n, std::string_view what);

// Decodes exactly expected float32 values from payload; otherwise length_mismatch.
std::vector<float> decode_floats(const std::string& payload, std::size_t expected, std::string_view what);

}  // namespace ocsi::detail
